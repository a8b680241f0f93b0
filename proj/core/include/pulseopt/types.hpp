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
#ifndef PULSEOPT_TYPES_H_
#define PULSEOPT_TYPES_H_

#include <complex>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace pulseopt {

using cxd = std::complex<double>;
using cx_mat = Eigen::MatrixXcd;
using cx_vec = Eigen::VectorXcd;
using sp_cx_mat = Eigen::SparseMatrix<cxd>;
using rvec = Eigen::VectorXd;
using rmat = Eigen::MatrixXd;

inline constexpr cxd ci{0.0, 1.0};
inline constexpr double two_pi = 6.283185307179586476925286766559;

/// Matrix 1-norm (maximum absolute column sum).
double one_norm(const cx_mat& m);
double one_norm(const sp_cx_mat& m);

/// Zeroes every entry with magnitude below `tol`. The spin operator algebra
/// guarantees sparsity in the product basis; this keeps numerically dead
/// entries from propagating through products.
void drop_small_entries(cx_mat& m, double tol);
sp_cx_mat pruned(const sp_cx_mat& m, double tol);

}  // namespace pulseopt

#endif  // PULSEOPT_TYPES_H_
