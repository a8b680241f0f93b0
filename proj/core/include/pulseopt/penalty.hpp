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
#ifndef PULSEOPT_PENALTY_H_
#define PULSEOPT_PENALTY_H_

#include <vector>

#include "pulseopt/control.hpp"
#include "pulseopt/types.hpp"

namespace pulseopt {

enum class PenaltyKind { NormSquare, SpilloutSquare, SpilloutCube, Smoothing };

/// Running-cost penalty specification. Smoothing penalties use a banded
/// difference operator of order 1 or 2.
struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::NormSquare;
  double weight = 1.0;
  int smoothing_order = 1;

  void validate() const {
    if (weight < 0.0) throw std::invalid_argument("penalty weight must be >= 0");
    if (smoothing_order < 1 || smoothing_order > 2)
      throw std::invalid_argument("smoothing order must be 1 or 2");
  }
};

/// Penalty value with analytic derivatives in the flattened control
/// ordering (slice-major, control-minor).
struct PenaltyEval {
  double value = 0.0;
  rvec gradient;
  rmat hessian;
};

/// K = (1/N) sum c^2 with gradient (2/N) c and Hessian (2/N) I; N is the
/// number of slices per channel.
PenaltyEval norm_square(const ControlSet& controls);

/// Penalises only excursions beyond |c| = 1: per element (|c|-1)^exponent
/// for |c| > 1, zero inside, averaged by 1/N. The cubic variant has a
/// continuous Hessian across the bound.
PenaltyEval spillout(const ControlSet& controls, int exponent);

/// K = (1/N) sum_k ||Delta c_k||^2 over channels, with Delta an N x N
/// difference operator acting along the time axis.
PenaltyEval smoothing(const ControlSet& controls, const rmat& delta);

/// First-order forward difference with a zero final row (rows sum to 0),
/// or second-order central difference with zero first and last rows.
rmat difference_operator(int n, int order);

/// Cartesian <-> polar transforms for one (x, y) control pair. The
/// derivative transforms are singular at the origin; below r_min they
/// throw instead of returning inflated values.
inline constexpr double kPolarRMin = 1e-8;

struct Polar {
  double r = 0.0;
  double phi = 0.0;  // atan2 branch: (-pi, pi]
};
Polar to_polar(double x, double y);
void from_polar(double r, double phi, double& x, double& y);

struct PolarGradient {
  double d_r = 0.0;
  double d_phi = 0.0;
};
PolarGradient gradient_to_polar(double x, double y, double dx, double dy);
void gradient_from_polar(double x, double y, double d_r, double d_phi,
                         double& dx, double& dy);

struct PolarHessian {
  double d_rr = 0.0;
  double d_rphi = 0.0;
  double d_phiphi = 0.0;
};
PolarHessian hessian_to_polar(double x, double y, double dx, double dy,
                              double dxx, double dxy, double dyy);
void hessian_from_polar(double x, double y, double d_r, double d_phi,
                        double d_rr, double d_rphi, double d_phiphi,
                        double& dxx, double& dxy, double& dyy);

/// Folds an unbounded value into [-1, 1] by the periodic reflection
/// c~ = |c - 4 floor((c-1)/4) - 3| - 1: identity on [-1, 1], continuous,
/// period 4.
double fold_bound(double c);
rvec fold_bound(const rvec& c);

/// Evaluates a list of weighted penalties on a control set; gradients and
/// Hessians accumulate in the flattened ordering.
PenaltyEval evaluate_penalties(const std::vector<PenaltySpec>& specs,
                               const ControlSet& controls);

}  // namespace pulseopt

#endif  // PULSEOPT_PENALTY_H_
