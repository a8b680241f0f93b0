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

#include <algorithm>
#include <random>

#include "pulseopt/matexp.hpp"
#include "pulseopt/spinop.hpp"
#include "test_util.hpp"

using namespace pulseopt;
using testutil::max_abs;

namespace {

SpinSystem single_spin(int mult) {
  SpinSystem system;
  system.multiplicities = {mult};
  return system;
}

SpinSystem spin_half_chain(int n) {
  SpinSystem system;
  system.multiplicities.assign(n, 2);
  return system;
}

}  // namespace

TEST_CASE("spin-1/2 operators are the Pauli matrices over two") {
  auto ops = spin_operators(2);
  cx_mat sz = ops.sz.matrix.toDense();
  cx_mat sx = ops.sx.matrix.toDense();
  cx_mat sy = ops.sy.matrix.toDense();
  CHECK(sz(0, 0) == cxd(0.5, 0.0));
  CHECK(sz(1, 1) == cxd(-0.5, 0.0));
  CHECK(sx(0, 1) == cxd(0.5, 0.0));
  CHECK(sx(1, 0) == cxd(0.5, 0.0));
  CHECK(sy(0, 1) == cxd(0.0, -0.5));
  CHECK(sy(1, 0) == cxd(0.0, 0.5));

  cx_mat s2 = ops.s2.matrix.toDense();
  CHECK(max_abs(cx_mat(s2 - 0.75 * cx_mat::Identity(2, 2))) < 1e-14);
}

TEST_CASE("spin-1 z operator carries the magnetic quantum numbers") {
  auto ops = spin_operators(3);
  cx_mat sz = ops.sz.matrix.toDense();
  CHECK(sz(0, 0) == cxd(1.0, 0.0));
  CHECK(sz(1, 1) == cxd(0.0, 0.0));
  CHECK(sz(2, 2) == cxd(-1.0, 0.0));

  cx_mat sx = ops.sx.matrix.toDense();
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(sx(0, 1) - cxd(inv_sqrt2, 0.0)) < 1e-15);
  CHECK(std::abs(sx(1, 2) - cxd(inv_sqrt2, 0.0)) < 1e-15);
  CHECK(std::abs(sx(0, 2)) < 1e-15);
}

TEST_CASE("angular momentum commutators and S^2 for multiplicities 2..6") {
  for (int mult = 2; mult <= 6; ++mult) {
    CAPTURE(mult);
    auto ops = spin_operators(mult);
    cx_mat sx = ops.sx.matrix.toDense();
    cx_mat sy = ops.sy.matrix.toDense();
    cx_mat sz = ops.sz.matrix.toDense();
    CHECK(max_abs(cx_mat(sx * sy - sy * sx - ci * sz)) < 1e-12);
    CHECK(max_abs(cx_mat(sy * sz - sz * sy - ci * sx)) < 1e-12);
    CHECK(max_abs(cx_mat(sz * sx - sx * sz - ci * sy)) < 1e-12);

    const double s = 0.5 * (mult - 1);
    cx_mat expected = s * (s + 1) * cx_mat::Identity(mult, mult);
    CHECK(max_abs(cx_mat(ops.s2.matrix.toDense() - expected)) < 1e-12);
  }
}

TEST_CASE("invalid multiplicity is rejected") {
  CHECK_THROWS_AS(spin_operators(1), std::invalid_argument);
  CHECK_THROWS_AS(spin_operators(0), std::invalid_argument);
}

TEST_CASE("composite operator places factors at their spin positions") {
  SpinSystem system = spin_half_chain(2);
  auto ops = spin_operators(2);
  cx_mat got =
      composite_operator(system, {{2, ops.sz.matrix}}).matrix.toDense();
  cx_mat expected(4, 4);
  expected.setZero();
  expected(0, 0) = 0.5;
  expected(1, 1) = -0.5;
  expected(2, 2) = 0.5;
  expected(3, 3) = -0.5;
  CHECK(max_abs(cx_mat(got - expected)) < 1e-14);
}

TEST_CASE("two-spin zz composite on three spins has +-1/4 entries, trace 0") {
  SpinSystem system = spin_half_chain(3);
  auto ops = spin_operators(2);
  cx_mat zz = composite_operator(system, {{1, ops.sz.matrix},
                                          {2, ops.sz.matrix}})
                  .matrix.toDense();
  CHECK(zz.rows() == 8);
  CHECK(std::abs(zz.trace()) < 1e-14);
  for (int i = 0; i < 8; ++i) CHECK(std::abs(std::abs(zz(i, i)) - 0.25) < 1e-14);
}

TEST_CASE("composites of traceless factors are traceless and commute across spins") {
  SpinSystem system;
  system.multiplicities = {2, 3, 2};
  auto h1 = spin_operators(2);
  auto h2 = spin_operators(3);
  cx_mat a = composite_operator(system, {{1, h1.sx.matrix}}).matrix.toDense();
  cx_mat b = composite_operator(system, {{2, h2.sy.matrix}}).matrix.toDense();
  CHECK(std::abs(a.trace()) < 1e-12);
  CHECK(std::abs(b.trace()) < 1e-12);
  CHECK(max_abs(cx_mat(a * b - b * a)) < 1e-12);
  CHECK(a.rows() == 12);
}

TEST_CASE("composite operator input validation") {
  SpinSystem system = spin_half_chain(2);
  auto ops = spin_operators(3);  // wrong dimension on purpose
  CHECK_THROWS_AS(composite_operator(system, {{3, ops.sz.matrix}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(composite_operator(system, {{1, ops.sz.matrix}}),
                  std::invalid_argument);
}

TEST_CASE("HCF drift matches the printed weak-coupling form") {
  SpinSystem system = spin_half_chain(3);
  system.offsets = {0.0, 0.0, 0.0};
  system.j_couplings = {{1, 2, two_pi * 140.0, true},
                        {2, 3, two_pi * -160.0, true}};
  cx_mat h0 = drift_hamiltonian(system).matrix.toDense();

  auto ops = spin_operators(2);
  cx_mat zz12 = composite_operator(system, {{1, ops.sz.matrix},
                                            {2, ops.sz.matrix}})
                    .matrix.toDense();
  cx_mat zz23 = composite_operator(system, {{2, ops.sz.matrix},
                                            {3, ops.sz.matrix}})
                    .matrix.toDense();
  const double pi = two_pi / 2.0;
  cx_mat expected = 280.0 * pi * zz12 - 320.0 * pi * zz23;
  CHECK(max_abs(cx_mat(h0 - expected)) < 1e-9);
  CHECK(max_abs(cx_mat(h0 - h0.adjoint())) < 1e-12);
}

TEST_CASE("quadrupolar drift equals the direct bilinear evaluation") {
  SpinSystem system = single_spin(3);
  Quadrupolar q;
  q.spin = 1;
  q.tensor = Eigen::Matrix3d::Zero();
  q.tensor(0, 0) = two_pi * 1e4;
  q.tensor(1, 1) = two_pi * 2e4;
  q.tensor(2, 2) = two_pi * -3e4;
  system.quadrupolar = {q};

  cx_mat h0 = drift_hamiltonian(system).matrix.toDense();
  auto ops = spin_operators(3);
  cx_mat sx = ops.sx.matrix.toDense();
  cx_mat sy = ops.sy.matrix.toDense();
  cx_mat sz = ops.sz.matrix.toDense();
  cx_mat expected = q.tensor(0, 0) * sx * sx + q.tensor(1, 1) * sy * sy +
                    q.tensor(2, 2) * sz * sz;
  CHECK(max_abs(cx_mat(h0 - expected)) < 1e-7);
  CHECK(max_abs(cx_mat(h0 - h0.adjoint())) < 1e-7);
}

TEST_CASE("empty couplings and zero offsets give a zero drift") {
  SpinSystem system = spin_half_chain(2);
  system.offsets = {0.0, 0.0};
  CHECK(max_abs(drift_hamiltonian(system).matrix.toDense()) == 0.0);
}

TEST_CASE("quadrupolar terms on spin-1/2 are rejected") {
  SpinSystem system = spin_half_chain(2);
  Quadrupolar q;
  q.spin = 1;
  q.tensor.setIdentity();
  system.quadrupolar = {q};
  CHECK_THROWS_AS(system.validate(), std::invalid_argument);
}

TEST_CASE("commutation superoperator of Sz has eigenvalue differences") {
  auto ops = spin_operators(2);
  Superoperator l = commutation_superoperator(ops.sz);
  Eigen::SelfAdjointEigenSolver<cx_mat> eig(l.matrix.toDense());
  rvec values = eig.eigenvalues();
  std::sort(values.data(), values.data() + values.size());
  CHECK(values[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(values[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(values[2] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(values[3] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(l.is_hermitian);
}

TEST_CASE("commutation superoperator of the identity vanishes") {
  HilbertOperator id;
  sp_cx_mat m(3, 3);
  m.setIdentity();
  id.matrix = m;
  CHECK(max_abs(commutation_superoperator(id).matrix.toDense()) < 1e-14);
}

TEST_CASE("commutation superoperator reproduces vec([H, X])") {
  std::mt19937_64 rng(17);
  cx_mat h = testutil::random_hermitian(4, rng);
  cx_mat x = testutil::random_complex(4, 4, rng);
  HilbertOperator hop{testutil::sparse_of(h)};
  Superoperator l = commutation_superoperator(hop);

  cx_vec lhs = l.matrix * vectorize(x);
  cx_vec rhs = vectorize(cx_mat(h * x - x * h));
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);

  // Hermitian input gives a Hermitian superoperator that annihilates vec(1).
  cx_mat dense = l.matrix.toDense();
  CHECK(max_abs(cx_mat(dense - dense.adjoint())) < 1e-12);
  cx_vec unit = vectorize(cx_mat(cx_mat::Identity(4, 4)));
  CHECK((dense * unit).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("commutation superoperator is linear") {
  std::mt19937_64 rng(23);
  cx_mat h1 = testutil::random_hermitian(3, rng);
  cx_mat h2 = testutil::random_hermitian(3, rng);
  const double a = 0.37, b = -1.91;
  cx_mat combo = a * h1 + b * h2;
  cx_mat lhs = commutation_superoperator(HilbertOperator{testutil::sparse_of(combo)})
                   .matrix.toDense();
  cx_mat rhs =
      a * commutation_superoperator(HilbertOperator{testutil::sparse_of(h1)})
              .matrix.toDense() +
      b * commutation_superoperator(HilbertOperator{testutil::sparse_of(h2)})
              .matrix.toDense();
  CHECK(max_abs(cx_mat(lhs - rhs)) < 1e-12);
}

TEST_CASE("relaxation superoperator classifies populations and coherences") {
  SpinSystem system = single_spin(2);
  SUBCASE("zero rates give the zero matrix") {
    system.relaxation = RelaxationRates{0.0, 0.0};
    CHECK(relaxation_superoperator(system).matrix.nonZeros() == 0);
  }
  SUBCASE("rates land on the vec positions of the density matrix") {
    system.relaxation = RelaxationRates{10.0, 20.0};
    cx_mat r = relaxation_superoperator(system).matrix.toDense();
    CHECK(r(0, 0) == cxd(10.0, 0.0));   // (1,1) population
    CHECK(r(1, 1) == cxd(20.0, 0.0));   // (2,1) coherence
    CHECK(r(2, 2) == cxd(20.0, 0.0));   // (1,2) coherence
    CHECK(r(3, 3) == cxd(10.0, 0.0));   // (2,2) population
    CHECK(max_abs(cx_mat(r - cx_mat(r.diagonal().asDiagonal()))) == 0.0);
  }
  SUBCASE("negative rates are rejected") {
    system.relaxation = RelaxationRates{-1.0, 0.0};
    CHECK_THROWS_AS(system.validate(), std::invalid_argument);
  }
}

TEST_CASE("free decay scales a coherence by exp(-r2 t)") {
  SpinSystem system = single_spin(2);
  system.offsets = {0.0};
  system.relaxation = RelaxationRates{10.0, 20.0};
  Superoperator l = drift_liouvillian(system);
  CHECK(l.includes_relaxation);

  const double t = 0.013;
  cx_vec coherence = cx_vec::Zero(4);
  coherence[1] = 1.0;  // (2,1) element of the density matrix
  cx_vec evolved = expm_action((-ci * t) * l.matrix, coherence);
  CHECK(std::abs(evolved[1].real() - std::exp(-20.0 * t)) < 1e-10);
  CHECK(std::abs(evolved[1].imag()) < 1e-10);
}

TEST_CASE("state builder produces normalised vectorised states") {
  SpinSystem system = spin_half_chain(2);

  cx_vec singlet = state_builder(system, "singlet(1,2)");
  CHECK(singlet.norm() == doctest::Approx(1.0).epsilon(1e-12));

  cx_vec zsum = state_builder(system, "Lz(1)+Lz(2)");
  CHECK(zsum.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(singlet.dot(zsum)) < 1e-12);
}

TEST_CASE("maximal unitary-orbit overlap with the singlet is 1/sqrt(2)") {
  SpinSystem system = spin_half_chain(2);
  cx_vec singlet = state_builder(system, "singlet(1,2)");

  // rho0 = (Lz1 + Lz2)/sqrt(2) = diag(1, 0, 0, -1)/sqrt(2). A unitary that
  // maps |aa> to the singlet and |bb> to the orthogonal central triplet
  // reaches the spectral bound, the largest eigenvalue 1/sqrt(2).
  const double s = 1.0 / std::sqrt(2.0);
  cx_vec sv(4), t0(4);
  sv << 0, s, -s, 0;
  t0 << 0, s, s, 0;
  cx_mat u(4, 4);
  u.setZero();
  u.col(0) = sv;
  u.col(3) = t0;
  u(0, 1) = 1.0;
  u(3, 2) = 1.0;
  CHECK(max_abs(cx_mat(u.adjoint() * u - cx_mat::Identity(4, 4))) < 1e-14);

  cx_mat rho0 = cx_mat::Zero(4, 4);
  rho0(0, 0) = s;
  rho0(3, 3) = -s;
  cx_mat rotated = u * rho0 * u.adjoint();
  const cxd overlap = singlet.dot(vectorize(rotated));
  CHECK(overlap.real() == doctest::Approx(s).epsilon(1e-12));
  CHECK(std::abs(overlap.imag()) < 1e-12);
}

TEST_CASE("T10 on a spin-1 is the normalised vectorised Lz") {
  SpinSystem system = single_spin(3);
  cx_vec t10 = state_builder(system, "T10(1)");
  cx_mat lz = spin_operators(3).sz.matrix.toDense();
  cx_vec expected = vectorize(lz) / vectorize(lz).norm();
  CHECK((t10 - expected).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(t10.norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("T22 on a spin-1 is half the squared raising operator") {
  SpinSystem system = single_spin(3);
  cx_vec t22 = state_builder(system, "T2p2(1)");
  auto ops = spin_operators(3);
  cx_mat lp = ops.sp.matrix.toDense();
  cx_mat expected_op = 0.5 * lp * lp;
  cx_vec expected = vectorize(expected_op) / vectorize(expected_op).norm();
  CHECK((t22 - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("state builder rejects unknown names and bad indices") {
  SpinSystem system = spin_half_chain(2);
  CHECK_THROWS_AS(state_builder(system, "Lq(1)"), std::invalid_argument);
  CHECK_THROWS_AS(state_builder(system, "Lz(7)"), std::invalid_argument);
  CHECK_THROWS_AS(state_builder(system, ""), std::invalid_argument);
  // T2p2 on a single spin-1/2 is identically zero and cannot normalise.
  CHECK_THROWS_AS(state_builder(system, "T2p2(1)"), std::invalid_argument);
}
