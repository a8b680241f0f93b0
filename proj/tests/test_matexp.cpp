/* Copyright 2026 The PulseOpt Authors. All Rights Reserved.
Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at
    http://www.apache.org/licenses/LICENSE-2.0
Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include <doctest.h>

#include <random>

#include "pulseopt/matexp.hpp"
#include "test_util.hpp"

using namespace pulseopt;
using testutil::max_abs;

TEST_CASE("expm of zero is the identity") {
  cx_mat a = cx_mat::Zero(5, 5);
  CHECK(max_abs(cx_mat(expm(a) - cx_mat::Identity(5, 5))) == 0.0);
}

TEST_CASE("expm of a diagonal matrix exponentiates the diagonal") {
  cx_mat a = cx_mat::Zero(2, 2);
  a(0, 0) = cxd(0.3, -2.0);
  a(1, 1) = cxd(-1.2, 0.7);
  cx_mat e = expm(a);
  CHECK(std::abs(e(0, 0) - std::exp(a(0, 0))) <
        1e-13 * std::abs(std::exp(a(0, 0))));
  CHECK(std::abs(e(1, 1) - std::exp(a(1, 1))) <
        1e-13 * std::abs(std::exp(a(1, 1))));
  CHECK(std::abs(e(0, 1)) < 1e-14);
}

TEST_CASE("expm matches the eigendecomposition oracle on Hermitian input") {
  std::mt19937_64 rng(5);
  cx_mat h = testutil::random_hermitian(8, rng, 2.0);
  cx_mat expected = testutil::expm_hermitian_oracle(h, cxd(1.0, 0.0));
  CHECK(max_abs(cx_mat(expm(h) - expected)) < 1e-12);
}

TEST_CASE("expm rejects non-finite input") {
  cx_mat a = cx_mat::Zero(2, 2);
  a(0, 0) = cxd(std::nan(""), 0.0);
  CHECK_THROWS_AS(expm(a), std::invalid_argument);
}

TEST_CASE("expm signals pathologically large norms") {
  cx_mat a = cx_mat::Identity(2, 2) * 1e40;
  ExpOptions opts;
  opts.max_squarings = 30;
  CHECK_THROWS_AS(expm(a, opts), std::runtime_error);
}

TEST_CASE("expm_action leaves vectors alone under the zero matrix") {
  sp_cx_mat a(4, 4);
  cx_vec v = cx_vec::Ones(4);
  CHECK((expm_action(a, v) - v).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("expm_action preserves the norm for skew-Hermitian generators") {
  std::mt19937_64 rng(7);
  cx_mat h = testutil::random_hermitian(12, rng, 3.0);
  sp_cx_mat a = testutil::sparse_of(cx_mat(-ci * h));
  cx_vec v = testutil::random_complex(12, 1, rng);
  cx_vec w = expm_action(a, v);
  CHECK(std::abs(w.norm() - v.norm()) < 1e-12 * v.norm());
}

TEST_CASE("expm_action agrees with the dense exponential") {
  std::mt19937_64 rng(11);
  cx_mat a = testutil::random_complex(16, 16, rng, 0.8);
  cx_vec v = testutil::random_complex(16, 1, rng);
  cx_vec expected = expm(a) * v;
  cx_vec got = expm_action(testutil::sparse_of(a), v);
  CHECK((got - expected).cwiseAbs().maxCoeff() < 1e-12 * expected.norm());
}

TEST_CASE("expm_action rejects dimension mismatches") {
  sp_cx_mat a(3, 3);
  cx_vec v = cx_vec::Ones(4);
  CHECK_THROWS_AS(expm_action(a, v), std::invalid_argument);
}

TEST_CASE("prop_derivative reduces to -i dt Hk for zero generator") {
  std::mt19937_64 rng(13);
  const double dt = 0.37;
  cx_mat hk = testutil::random_hermitian(5, rng);
  sp_cx_mat zero(5, 5);
  auto pd = prop_derivative(zero, testutil::sparse_of(hk), dt);
  CHECK(max_abs(cx_mat(pd.propagator - cx_mat::Identity(5, 5))) < 1e-14);
  CHECK(max_abs(cx_mat(pd.derivative - cx_mat(-ci * dt * hk))) < 1e-13);
}

TEST_CASE("prop_derivative collapses when the factors commute") {
  // Diagonal generator and direction commute exactly.
  std::mt19937_64 rng(19);
  cx_vec hd = testutil::random_complex(6, 1, rng).real().cast<cxd>();
  cx_vec kd = testutil::random_complex(6, 1, rng).real().cast<cxd>();
  cx_mat h = hd.asDiagonal();
  cx_mat hk = kd.asDiagonal();
  const double dt = 0.85;
  auto pd = prop_derivative(testutil::sparse_of(h), testutil::sparse_of(hk), dt);
  cx_mat expected = -ci * dt * hk * pd.propagator;
  CHECK(max_abs(cx_mat(pd.derivative - expected)) < 1e-12);
}

TEST_CASE("prop_derivative matches central finite differences") {
  std::mt19937_64 rng(29);
  cx_mat h = testutil::random_hermitian(9, rng, 1.5);
  cx_mat hk = testutil::random_hermitian(9, rng, 1.0);
  const double dt = 0.6;
  auto pd = prop_derivative(testutil::sparse_of(h), testutil::sparse_of(hk), dt);

  const double hstep = 1e-5 * one_norm(h);
  cx_mat plus = expm(cx_mat(-ci * dt * (h + hstep * hk)));
  cx_mat minus = expm(cx_mat(-ci * dt * (h - hstep * hk)));
  cx_mat fd = (plus - minus) / (2.0 * hstep);
  CHECK(max_abs(cx_mat(pd.derivative - fd)) < 1e-7 * max_abs(fd));
}

TEST_CASE("prop_second_derivative second Taylor term for zero generator") {
  std::mt19937_64 rng(31);
  cx_mat b = testutil::random_hermitian(4, rng);
  sp_cx_mat zero(4, 4);
  const double dt = 0.45;
  auto psd = prop_second_derivative(zero, testutil::sparse_of(b),
                                    testutil::sparse_of(b), dt);
  cx_mat expected = (-ci * dt) * (-ci * dt) * (b * b);
  CHECK(max_abs(cx_mat(psd.d2 - expected)) < 1e-12);
}

TEST_CASE("prop_second_derivative with a zero k-direction") {
  std::mt19937_64 rng(37);
  cx_mat h = testutil::random_hermitian(5, rng);
  cx_mat hj = testutil::random_hermitian(5, rng);
  sp_cx_mat zero(5, 5);
  const double dt = 0.5;
  auto psd = prop_second_derivative(testutil::sparse_of(h), zero,
                                    testutil::sparse_of(hj), dt);
  CHECK(max_abs(psd.d2) < 1e-13);
  CHECK(max_abs(psd.dk) < 1e-13);
  auto pd = prop_derivative(testutil::sparse_of(h), testutil::sparse_of(hj), dt);
  CHECK(max_abs(cx_mat(psd.dj - pd.derivative)) < 1e-13);
}

TEST_CASE("second directional derivatives match finite differences") {
  std::mt19937_64 rng(41);
  cx_mat h = testutil::random_hermitian(9, rng, 1.2);
  cx_mat hk = testutil::random_hermitian(9, rng);
  cx_mat hj = testutil::random_hermitian(9, rng);
  const double dt = 0.7;
  auto kj = prop_second_derivative(testutil::sparse_of(h),
                                   testutil::sparse_of(hk),
                                   testutil::sparse_of(hj), dt);

  auto prop_at = [&](double ck, double cj) {
    return expm(cx_mat(-ci * dt * (h + ck * hk + cj * hj)));
  };
  const double step = 1e-3;

  SUBCASE("diagonal direction (k = j)") {
    auto kk = prop_second_derivative(testutil::sparse_of(h),
                                     testutil::sparse_of(hk),
                                     testutil::sparse_of(hk), dt);
    cx_mat fd = (prop_at(step, 0.0) - 2.0 * prop_at(0.0, 0.0) +
                 prop_at(-step, 0.0)) /
                (step * step);
    CHECK(max_abs(cx_mat(kk.d2 - fd)) < 1e-5 * max_abs(fd));
  }

  SUBCASE("mixed direction, both chained orders sum to the partial") {
    auto jk = prop_second_derivative(testutil::sparse_of(h),
                                     testutil::sparse_of(hj),
                                     testutil::sparse_of(hk), dt);
    cx_mat fd = (prop_at(step, step) - prop_at(step, -step) -
                 prop_at(-step, step) + prop_at(-step, -step)) /
                (4.0 * step * step);
    cx_mat mixed = 0.5 * (kj.d2 + jk.d2);
    CHECK(max_abs(cx_mat(mixed - fd)) < 1e-5 * max_abs(fd));
  }

  SUBCASE("commuting directions need a single order") {
    // Diagonal directions commute with each other.
    std::mt19937_64 rng2(43);
    cx_mat dk = cx_mat(testutil::random_complex(9, 1, rng2).real().cast<cxd>().asDiagonal());
    cx_mat dj = cx_mat(testutil::random_complex(9, 1, rng2).real().cast<cxd>().asDiagonal());
    auto psd = prop_second_derivative(testutil::sparse_of(h),
                                      testutil::sparse_of(dk),
                                      testutil::sparse_of(dj), dt);
    auto prop_at2 = [&](double ck, double cj) {
      return expm(cx_mat(-ci * dt * (h + ck * dk + cj * dj)));
    };
    cx_mat fd = (prop_at2(step, step) - prop_at2(step, -step) -
                 prop_at2(-step, step) + prop_at2(-step, -step)) /
                (4.0 * step * step);
    CHECK(max_abs(cx_mat(psd.d2 - fd)) < 1e-5 * max_abs(fd));
  }
}

TEST_CASE("first derivatives are recycled identically inside the 3-block") {
  std::mt19937_64 rng(47);
  cx_mat h = testutil::random_hermitian(7, rng, 1.1);
  cx_mat hk = testutil::random_hermitian(7, rng);
  cx_mat hj = testutil::random_hermitian(7, rng);
  const double dt = 0.9;
  auto psd = prop_second_derivative(testutil::sparse_of(h),
                                    testutil::sparse_of(hk),
                                    testutil::sparse_of(hj), dt);
  auto pk = prop_derivative(testutil::sparse_of(h), testutil::sparse_of(hk), dt);
  auto pj = prop_derivative(testutil::sparse_of(h), testutil::sparse_of(hj), dt);
  CHECK(max_abs(cx_mat(psd.dk - pk.derivative)) < 1e-12);
  CHECK(max_abs(cx_mat(psd.dj - pj.derivative)) < 1e-12);
  CHECK(max_abs(cx_mat(psd.propagator - pk.propagator)) < 1e-12);
}

TEST_CASE("aux_action applies the augmented exponential to a stacked vector") {
  std::mt19937_64 rng(53);
  cx_mat h = testutil::random_hermitian(8, rng, 1.3);
  cx_mat hk = testutil::random_hermitian(8, rng);
  cx_mat hj = testutil::random_hermitian(8, rng);
  cx_vec v = testutil::random_complex(8, 1, rng);
  const double dt = 0.55;

  SUBCASE("2-block with zero generator gives -i dt Hk v") {
    sp_cx_mat zero(8, 8);
    AugmentedBlocks aug{zero, testutil::sparse_of(hk), std::nullopt, dt};
    auto slots = aux_action(aug, v);
    CHECK((slots[0] - cx_vec(-ci * dt * (hk * v))).cwiseAbs().maxCoeff() <
          1e-13);
    CHECK((slots[1] - v).cwiseAbs().maxCoeff() < 1e-13);
  }

  SUBCASE("2-block equals the dense derivative times the vector") {
    AugmentedBlocks aug{testutil::sparse_of(h), testutil::sparse_of(hk),
                        std::nullopt, dt};
    auto slots = aux_action(aug, v);
    auto pd =
        prop_derivative(testutil::sparse_of(h), testutil::sparse_of(hk), dt);
    CHECK((slots[0] - cx_vec(pd.derivative * v)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((slots[1] - cx_vec(pd.propagator * v)).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("3-block top slot is half the second derivative times the vector") {
    AugmentedBlocks aug{testutil::sparse_of(h), testutil::sparse_of(hk),
                        testutil::sparse_of(hj), dt};
    auto slots = aux_action(aug, v);
    auto psd = prop_second_derivative(testutil::sparse_of(h),
                                      testutil::sparse_of(hk),
                                      testutil::sparse_of(hj), dt);
    CHECK((slots[0] - cx_vec(0.5 * (psd.d2 * v))).cwiseAbs().maxCoeff() <
          1e-12);
    CHECK((slots[1] - cx_vec(psd.dj * v)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((slots[2] - cx_vec(psd.propagator * v)).cwiseAbs().maxCoeff() <
          1e-12);
  }

  SUBCASE("dimension mismatches are rejected") {
    AugmentedBlocks aug{testutil::sparse_of(h), testutil::sparse_of(hk),
                        std::nullopt, dt};
    CHECK_THROWS_AS(aux_action(aug, cx_vec::Ones(5)), std::invalid_argument);
  }
}

TEST_CASE("expm(A) expm(-A) is the identity") {
  std::mt19937_64 rng(59);
  for (int trial = 0; trial < 5; ++trial) {
    cx_mat a = testutil::random_complex(10, 10, rng);
    a *= 10.0 / one_norm(a);
    cx_mat prod = expm(a) * expm(cx_mat(-a));
    CHECK(max_abs(cx_mat(prod - cx_mat::Identity(10, 10))) < 1e-11);
  }
}

TEST_CASE("unitarity of exponentials of skew-Hermitian generators") {
  std::mt19937_64 rng(61);
  cx_mat h = testutil::random_hermitian(10, rng, 4.0);
  cx_vec v = testutil::random_complex(10, 1, rng);
  const double dt = 1.7;
  cx_vec w = expm(cx_mat(-ci * dt * h)) * v;
  CHECK(std::abs(w.norm() - v.norm()) < 1e-11 * v.norm());
}

TEST_CASE("the additive law holds iff the factors commute") {
  std::mt19937_64 rng(67);
  SUBCASE("commuting pair") {
    cx_vec da = testutil::random_complex(6, 1, rng).real().cast<cxd>();
    cx_vec db = testutil::random_complex(6, 1, rng).real().cast<cxd>();
    cx_mat a = da.asDiagonal();
    cx_mat b = db.asDiagonal();
    cx_mat lhs = expm(a) * expm(b);
    cx_mat rhs = expm(cx_mat(a + b));
    CHECK(max_abs(cx_mat(lhs - rhs)) < 1e-11);
  }
  SUBCASE("witnessed non-commuting pair") {
    cx_mat a = cx_mat::Zero(2, 2), b = cx_mat::Zero(2, 2);
    a(0, 1) = a(1, 0) = 1.0;       // Pauli x
    b(0, 0) = 1.0;
    b(1, 1) = -1.0;                // Pauli z
    cx_mat lhs = expm(a) * expm(b);
    cx_mat rhs = expm(cx_mat(a + b));
    CHECK(max_abs(cx_mat(lhs - rhs)) > 1e-6);
  }
}

TEST_CASE("results are independent of the induced squaring count") {
  std::mt19937_64 rng(71);
  cx_mat h = testutil::random_hermitian(8, rng);
  h /= one_norm(h);
  for (double scale : {0.5, 1.0, 8.0, 64.0, 512.0}) {
    CAPTURE(scale);
    cx_mat got = expm(cx_mat(-ci * scale * h));
    cx_mat expected = testutil::expm_hermitian_oracle(h, -ci * scale);
    CHECK(max_abs(cx_mat(got - expected)) < 1e-11);
  }
}
