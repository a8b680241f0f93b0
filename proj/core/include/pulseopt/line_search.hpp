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
#ifndef PULSEOPT_LINE_SEARCH_H_
#define PULSEOPT_LINE_SEARCH_H_

#include <functional>
#include <utility>

#include "pulseopt/types.hpp"

namespace pulseopt {

/// Outcome of a line search along an ascent direction. `value` and
/// `gradient` (when available) are taken at the accepted step so callers
/// can reuse them.
struct LineSearchResult {
  bool success = false;
  double alpha = 0.0;
  double value = 0.0;
  rvec gradient;           // empty unless the search evaluated gradients
  int value_evals = 0;
  int gradient_evals = 0;
};

/// Objective callbacks receive the trial point and its step length.
using LineValueFn = std::function<double(const rvec&, double)>;
using LineValueGradFn =
    std::function<std::pair<double, rvec>(const rvec&, double)>;

/// Armijo backtracking for maximisation: the largest alpha0 * beta^j with
/// J(c + alpha d) >= J(c) + c1 alpha <g, d>. Fails after 50 reductions.
/// Throws std::invalid_argument if d is not an ascent direction.
LineSearchResult backtracking_search(const LineValueFn& eval, const rvec& c,
                                     const rvec& direction, const rvec& grad,
                                     double value0, double alpha0, double beta,
                                     double c1);

struct BracketSectionParams {
  double c1 = 1e-4;
  double c2 = 0.9;
  double tau1 = 3.0;   // bracketing expansion factor
  double tau2 = 0.1;   // left contraction
  double tau3 = 0.5;   // right contraction
  double alpha_max = 100.0;
  int max_bracket_steps = 20;
  int max_section_steps = 50;
};

/// Two-phase bracketing-and-sectioning search with cubic interpolation and
/// strong-Wolfe termination, adapted to maximisation. Degenerate cubic
/// steps fall back to the bracket midpoint.
LineSearchResult bracket_section_search(const LineValueGradFn& eval_with_grad,
                                        const rvec& c, const rvec& direction,
                                        double value0, const rvec& grad0,
                                        double alpha0,
                                        const BracketSectionParams& params);

}  // namespace pulseopt

#endif  // PULSEOPT_LINE_SEARCH_H_
