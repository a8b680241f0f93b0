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
#include "pulseopt/penalty.hpp"

#include <cmath>
#include <stdexcept>

namespace pulseopt {

namespace {

// Flattened index of channel k, slice n (0-based): slice-major.
inline int flat(int k, int n, int num_k) { return n * num_k + k; }

}  // namespace

PenaltyEval norm_square(const ControlSet& controls) {
  controls.validate();
  const int k_max = controls.num_controls();
  const int n_max = controls.num_slices();
  const int dim = k_max * n_max;
  const double inv_n = 1.0 / n_max;

  PenaltyEval out;
  out.gradient = rvec::Zero(dim);
  out.hessian = rmat::Zero(dim, dim);
  for (int n = 0; n < n_max; ++n)
    for (int k = 0; k < k_max; ++k) {
      const double c = controls.amplitudes(k, n);
      const int i = flat(k, n, k_max);
      out.value += inv_n * c * c;
      out.gradient[i] = 2.0 * inv_n * c;
      out.hessian(i, i) = 2.0 * inv_n;
    }
  return out;
}

PenaltyEval spillout(const ControlSet& controls, int exponent) {
  controls.validate();
  if (exponent != 2 && exponent != 3)
    throw std::invalid_argument("spillout exponent must be 2 or 3");
  const int k_max = controls.num_controls();
  const int n_max = controls.num_slices();
  const int dim = k_max * n_max;
  const double inv_n = 1.0 / n_max;

  PenaltyEval out;
  out.gradient = rvec::Zero(dim);
  out.hessian = rmat::Zero(dim, dim);
  for (int n = 0; n < n_max; ++n)
    for (int k = 0; k < k_max; ++k) {
      const double c = controls.amplitudes(k, n);
      const double a = std::abs(c);
      if (a <= 1.0) continue;
      const int i = flat(k, n, k_max);
      const double excess = a - 1.0;
      const double sign = c >= 0.0 ? 1.0 : -1.0;
      if (exponent == 2) {
        out.value += inv_n * excess * excess;
        out.gradient[i] = inv_n * 2.0 * excess * sign;
        out.hessian(i, i) = inv_n * 2.0;
      } else {
        out.value += inv_n * excess * excess * excess;
        out.gradient[i] = inv_n * 3.0 * excess * excess * sign;
        out.hessian(i, i) = inv_n * 6.0 * excess;
      }
    }
  return out;
}

rmat difference_operator(int n, int order) {
  if (n < 1) throw std::invalid_argument("difference operator needs n >= 1");
  rmat delta = rmat::Zero(n, n);
  if (order == 1) {
    for (int i = 0; i + 1 < n; ++i) {
      delta(i, i) = -1.0;
      delta(i, i + 1) = 1.0;
    }
  } else if (order == 2) {
    for (int i = 1; i + 1 < n; ++i) {
      delta(i, i - 1) = 1.0;
      delta(i, i) = -2.0;
      delta(i, i + 1) = 1.0;
    }
  } else {
    throw std::invalid_argument("difference operator order must be 1 or 2");
  }
  return delta;
}

PenaltyEval smoothing(const ControlSet& controls, const rmat& delta) {
  controls.validate();
  const int k_max = controls.num_controls();
  const int n_max = controls.num_slices();
  if (delta.cols() != n_max || delta.rows() != n_max)
    throw std::invalid_argument("smoothing operator must be N x N");
  const int dim = k_max * n_max;
  const double inv_n = 1.0 / n_max;
  const rmat dtd = delta.transpose() * delta;

  PenaltyEval out;
  out.gradient = rvec::Zero(dim);
  out.hessian = rmat::Zero(dim, dim);
  for (int k = 0; k < k_max; ++k) {
    const rvec channel = controls.amplitudes.row(k).transpose();
    const rvec dc = delta * channel;
    out.value += inv_n * dc.squaredNorm();
    const rvec grad_channel = 2.0 * inv_n * (dtd * channel);
    for (int n = 0; n < n_max; ++n) {
      out.gradient[flat(k, n, k_max)] = grad_channel[n];
      for (int m = 0; m < n_max; ++m)
        out.hessian(flat(k, n, k_max), flat(k, m, k_max)) =
            2.0 * inv_n * dtd(n, m);
    }
  }
  return out;
}

Polar to_polar(double x, double y) {
  return Polar{std::hypot(x, y), std::atan2(y, x)};
}

void from_polar(double r, double phi, double& x, double& y) {
  x = r * std::cos(phi);
  y = r * std::sin(phi);
}

namespace {
void require_off_origin(double r) {
  if (r <= kPolarRMin)
    throw std::domain_error(
        "polar derivative transform is singular near the origin");
}
}  // namespace

PolarGradient gradient_to_polar(double x, double y, double dx, double dy) {
  const double r = std::hypot(x, y);
  require_off_origin(r);
  PolarGradient g;
  const double c = x / r, s = y / r;
  g.d_r = c * dx + s * dy;
  g.d_phi = x * dy - y * dx;
  return g;
}

void gradient_from_polar(double x, double y, double d_r, double d_phi,
                         double& dx, double& dy) {
  const double r = std::hypot(x, y);
  require_off_origin(r);
  const double c = x / r, s = y / r;
  dx = c * d_r - s / r * d_phi;
  dy = s * d_r + c / r * d_phi;
}

PolarHessian hessian_to_polar(double x, double y, double dx, double dy,
                              double dxx, double dxy, double dyy) {
  const double r = std::hypot(x, y);
  require_off_origin(r);
  const double c = x / r, s = y / r;
  PolarHessian h;
  h.d_rr = c * c * dxx + 2.0 * c * s * dxy + s * s * dyy;
  h.d_phiphi = -r * (c * dx + s * dy) +
               r * r * (s * s * dxx - 2.0 * c * s * dxy + c * c * dyy);
  h.d_rphi = c * dy - s * dx +
             r * (c * s * (dyy - dxx) + (c * c - s * s) * dxy);
  return h;
}

void hessian_from_polar(double x, double y, double d_r, double d_phi,
                        double d_rr, double d_rphi, double d_phiphi,
                        double& dxx, double& dxy, double& dyy) {
  const double r = std::hypot(x, y);
  require_off_origin(r);
  const double r2 = r * r, r3 = r2 * r, r4 = r2 * r2;
  dxx = 2.0 * x * y * d_phi / r4 + y * y * d_phiphi / r4 + d_r / r -
        x * x * d_r / r3 - 2.0 * x * y * d_rphi / r3 + x * x * d_rr / r2;
  dyy = -2.0 * x * y * d_phi / r4 + x * x * d_phiphi / r4 + d_r / r -
        y * y * d_r / r3 + 2.0 * x * y * d_rphi / r3 + y * y * d_rr / r2;
  dxy = -d_phi / r2 + 2.0 * y * y * d_phi / r4 - x * y * d_phiphi / r4 -
        x * y * d_r / r3 + (x * x - y * y) * d_rphi / r3 + x * y * d_rr / r2;
}

double fold_bound(double c) {
  return std::abs(c - 4.0 * std::floor((c - 1.0) / 4.0) - 3.0) - 1.0;
}

rvec fold_bound(const rvec& c) {
  rvec out(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) out[i] = fold_bound(c[i]);
  return out;
}

PenaltyEval evaluate_penalties(const std::vector<PenaltySpec>& specs,
                               const ControlSet& controls) {
  const int dim = controls.num_controls() * controls.num_slices();
  PenaltyEval total;
  total.gradient = rvec::Zero(dim);
  total.hessian = rmat::Zero(dim, dim);
  for (const auto& spec : specs) {
    spec.validate();
    PenaltyEval one;
    switch (spec.kind) {
      case PenaltyKind::NormSquare:
        one = norm_square(controls);
        break;
      case PenaltyKind::SpilloutSquare:
        one = spillout(controls, 2);
        break;
      case PenaltyKind::SpilloutCube:
        one = spillout(controls, 3);
        break;
      case PenaltyKind::Smoothing:
        one = smoothing(controls, difference_operator(controls.num_slices(),
                                                      spec.smoothing_order));
        break;
    }
    total.value += spec.weight * one.value;
    total.gradient += spec.weight * one.gradient;
    total.hessian += spec.weight * one.hessian;
  }
  return total;
}

}  // namespace pulseopt
