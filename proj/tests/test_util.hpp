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
#ifndef PULSEOPT_TESTS_TEST_UTIL_H_
#define PULSEOPT_TESTS_TEST_UTIL_H_

#include <random>

#include "pulseopt/types.hpp"

namespace testutil {

using pulseopt::cx_mat;
using pulseopt::cx_vec;
using pulseopt::cxd;
using pulseopt::rmat;
using pulseopt::rvec;
using pulseopt::sp_cx_mat;

inline double max_abs(const cx_mat& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}
inline double max_abs(const rmat& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline cx_mat random_complex(int rows, int cols, std::mt19937_64& rng,
                             double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  cx_mat m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = cxd(dist(rng), dist(rng)) * scale;
  return m;
}

inline cx_mat random_hermitian(int n, std::mt19937_64& rng, double scale = 1.0) {
  cx_mat m = random_complex(n, n, rng, scale);
  return cx_mat(0.5 * (m + m.adjoint()));
}

inline sp_cx_mat sparse_of(const cx_mat& m) {
  sp_cx_mat s = m.sparseView(1.0, 0.0);
  s.makeCompressed();
  return s;
}

// Reference exponential of a Hermitian matrix scaled by a complex factor,
// through its eigendecomposition: e^{factor * H} = Q e^{factor * lambda} Q^dag.
inline cx_mat expm_hermitian_oracle(const cx_mat& h, cxd factor) {
  Eigen::SelfAdjointEigenSolver<cx_mat> eig(h);
  cx_vec phases(h.rows());
  for (int i = 0; i < h.rows(); ++i)
    phases[i] = std::exp(factor * eig.eigenvalues()[i]);
  return eig.eigenvectors() * phases.asDiagonal() *
         eig.eigenvectors().adjoint();
}

}  // namespace testutil

#endif  // PULSEOPT_TESTS_TEST_UTIL_H_
