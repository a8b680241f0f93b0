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
#include "pulseopt/regularize.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace pulseopt {

namespace {

bool cholesky_succeeds(const rmat& m) {
  Eigen::LLT<rmat> llt(m);
  return llt.info() == Eigen::Success;
}

}  // namespace

CholeskyRegularization cholesky_regularize(const rmat& h) {
  if (h.rows() != h.cols())
    throw std::invalid_argument("cholesky_regularize: non-square matrix");
  const rmat neg = -h;
  CholeskyRegularization out;
  if (cholesky_succeeds(neg)) {
    out.h_reg = h;
    out.sigma = 0.0;
    out.iterations = 0;
    return out;
  }

  const double fro = h.norm();
  const double min_diag = neg.diagonal().minCoeff();
  double sigma = min_diag < 0.0 ? fro - min_diag : fro;
  if (sigma <= 0.0) sigma = std::numeric_limits<double>::epsilon();
  int iterations = 1;
  while (!cholesky_succeeds(neg + sigma * rmat::Identity(h.rows(), h.cols()))) {
    sigma *= 2.0;
    ++iterations;
    if (sigma > 1e16 * std::max(fro, 1.0))
      throw std::runtime_error("cholesky_regularize: regularization failed");
  }
  out.h_reg = h - sigma * rmat::Identity(h.rows(), h.cols());
  out.sigma = sigma;
  out.iterations = iterations;
  return out;
}

rmat trm_regularize(const rmat& h, double delta) {
  if (h.rows() != h.cols())
    throw std::invalid_argument("trm_regularize: non-square matrix");
  if (!(delta > 0.0))
    throw std::invalid_argument("trm_regularize: delta must be > 0");
  Eigen::SelfAdjointEigenSolver<rmat> eig(-h);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("trm_regularize: eigendecomposition failed");
  const double lambda_min = eig.eigenvalues().minCoeff();
  const double sigma = std::max(0.0, delta - lambda_min);
  rvec shifted = eig.eigenvalues().array() + sigma;
  const rmat neg_reg = eig.eigenvectors() * shifted.asDiagonal() *
                       eig.eigenvectors().transpose();
  return -neg_reg;
}

RfoResult rfo_regularize(const rmat& h, const rvec& g, double zeta_max,
                         double phi_cond) {
  const int n = static_cast<int>(h.rows());
  if (h.rows() != h.cols() || g.size() != n)
    throw std::invalid_argument("rfo_regularize: dimension mismatch");
  if (!(zeta_max > 1.0))
    throw std::invalid_argument("rfo_regularize: zeta_max must be > 1");
  if (!(phi_cond > 0.0 && phi_cond < 1.0))
    throw std::invalid_argument("rfo_regularize: phi_cond must be in (0, 1)");

  Eigen::SelfAdjointEigenSolver<rmat> eig_h(h);
  if (eig_h.info() != Eigen::Success)
    throw std::runtime_error("rfo_regularize: eigendecomposition failed");
  const double lambda_min_h = eig_h.eigenvalues().minCoeff();
  double alpha =
      std::abs(lambda_min_h) < 1e-12 ? 1.0 : 1.0 / std::sqrt(std::abs(lambda_min_h));

  const rmat neg = -h;
  rmat aug(n + 1, n + 1);
  RfoResult out;
  int iterations = 0;
  rmat block;
  while (true) {
    aug.topLeftCorner(n, n) = alpha * alpha * neg;
    aug.topRightCorner(n, 1) = alpha * g;
    aug.bottomLeftCorner(1, n) = alpha * g.transpose();
    aug(n, n) = 0.0;
    Eigen::SelfAdjointEigenSolver<rmat> eig_aug(aug);
    if (eig_aug.info() != Eigen::Success)
      throw std::runtime_error("rfo_regularize: eigendecomposition failed");
    const double sigma = std::max(0.0, -eig_aug.eigenvalues().minCoeff());
    // Shifting the full augmented spectrum adds sigma I; the regularised
    // top-left block rescaled by 1/alpha^2 is the working curvature.
    block = neg + (sigma / (alpha * alpha)) * rmat::Identity(n, n);
    Eigen::SelfAdjointEigenSolver<rmat> eig_block(block);
    const double bmin = eig_block.eigenvalues().minCoeff();
    const double bmax = eig_block.eigenvalues().maxCoeff();
    out.cond = bmin > 0.0 ? bmax / bmin
                          : std::numeric_limits<double>::infinity();
    if (out.cond <= zeta_max) break;
    alpha *= phi_cond;
    ++iterations;
    if (alpha < 1e-12)
      throw std::runtime_error("rfo_regularize: conditioning failed");
  }

  out.direction = Eigen::LDLT<rmat>(block).solve(g);
  out.alpha = alpha;
  out.iterations = iterations;
  return out;
}

}  // namespace pulseopt
