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
#include "pulseopt/line_search.hpp"

#include <cmath>
#include <stdexcept>

namespace pulseopt {

namespace {

constexpr int kMaxBacktracks = 50;

// Minimiser of the Hermite cubic through (a, fa, ga) and (b, fb, gb),
// in minimisation convention. Returns NaN when degenerate.
double cubic_minimum(double a, double fa, double ga, double b, double fb,
                     double gb) {
  const double d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - ga * gb;
  if (disc < 0.0) return std::nan("");
  const double d2 = std::copysign(std::sqrt(disc), b - a);
  const double denom = gb - ga + 2.0 * d2;
  if (denom == 0.0) return std::nan("");
  return b - (b - a) * (gb + d2 - d1) / denom;
}

}  // namespace

LineSearchResult backtracking_search(const LineValueFn& eval, const rvec& c,
                                     const rvec& direction, const rvec& grad,
                                     double value0, double alpha0, double beta,
                                     double c1) {
  if (!(beta > 0.0 && beta < 1.0))
    throw std::invalid_argument("backtracking beta must be in (0, 1)");
  const double slope = grad.dot(direction);
  if (!(slope > 0.0))
    throw std::invalid_argument(
        "backtracking_search: direction is not an ascent direction");

  LineSearchResult result;
  double alpha = alpha0;
  for (int j = 0; j <= kMaxBacktracks; ++j) {
    const double value = eval(c + alpha * direction, alpha);
    ++result.value_evals;
    if (value >= value0 + c1 * alpha * slope) {
      result.success = true;
      result.alpha = alpha;
      result.value = value;
      return result;
    }
    alpha *= beta;
  }
  result.success = false;
  result.alpha = alpha;
  return result;
}

LineSearchResult bracket_section_search(const LineValueGradFn& eval_with_grad,
                                        const rvec& c, const rvec& direction,
                                        double value0, const rvec& grad0,
                                        double alpha0,
                                        const BracketSectionParams& params) {
  const double slope0_up = grad0.dot(direction);
  if (!(slope0_up > 0.0))
    throw std::invalid_argument(
        "bracket_section_search: direction is not an ascent direction");

  // Work on the negated objective so the procedure reads in its usual
  // minimisation form: f(alpha) = -J(c + alpha d).
  const double f0 = -value0;
  const double g0 = -slope0_up;

  LineSearchResult result;
  struct Point {
    double alpha, f, g;
    double value;
    rvec gradient;
  };
  auto probe = [&](double alpha) {
    auto [value, grad] = eval_with_grad(c + alpha * direction, alpha);
    ++result.value_evals;
    ++result.gradient_evals;
    return Point{alpha, -value, -grad.dot(direction), value, std::move(grad)};
  };
  auto armijo_ok = [&](const Point& pt) {
    return pt.f <= f0 + params.c1 * pt.alpha * g0;
  };
  auto accept = [&](const Point& pt) {
    result.success = true;
    result.alpha = pt.alpha;
    result.value = pt.value;
    result.gradient = pt.gradient;
    return result;
  };

  const double mu = params.alpha_max;
  Point prev{0.0, f0, g0, value0, grad0};
  Point lo, hi;
  bool bracketed = false;
  double alpha = std::min(alpha0, mu);

  for (int j = 0; j < params.max_bracket_steps; ++j) {
    Point pt = probe(alpha);
    if (pt.f > f0 + params.c1 * pt.alpha * g0 || pt.f >= prev.f) {
      lo = prev;
      hi = pt;
      bracketed = true;
      break;
    }
    if (std::abs(pt.g) <= params.c2 * std::abs(g0)) return accept(pt);
    if (pt.g >= 0.0) {
      lo = pt;
      hi = prev;
      bracketed = true;
      break;
    }
    if (mu <= 2.0 * pt.alpha - prev.alpha) {
      prev = pt;
      alpha = mu;
      continue;
    }
    const double lo_a = 2.0 * pt.alpha - prev.alpha;
    const double hi_a =
        std::min(mu, pt.alpha + params.tau1 * (pt.alpha - prev.alpha));
    double next = cubic_minimum(prev.alpha, prev.f, prev.g, pt.alpha, pt.f, pt.g);
    if (!std::isfinite(next) || next < lo_a || next > hi_a) next = hi_a;
    prev = pt;
    alpha = next;
  }
  if (!bracketed) {
    result.success = false;
    return result;
  }

  // Sectioning: lo always satisfies the Armijo condition side of the
  // invariant (it is the best point so far); the minimiser lies between.
  for (int k = 0; k < params.max_section_steps; ++k) {
    const double span = hi.alpha - lo.alpha;
    const double left = lo.alpha + params.tau2 * span;
    const double right = hi.alpha - params.tau3 * span;
    double trial = cubic_minimum(lo.alpha, lo.f, lo.g, hi.alpha, hi.f, hi.g);
    const double lo_bound = std::min(left, right);
    const double hi_bound = std::max(left, right);
    if (!std::isfinite(trial) || trial < lo_bound || trial > hi_bound)
      trial = 0.5 * (lo.alpha + hi.alpha);
    Point pt = probe(trial);
    if (pt.f > f0 + params.c1 * pt.alpha * g0 || pt.f >= lo.f) {
      hi = pt;
    } else {
      if (std::abs(pt.g) <= params.c2 * std::abs(g0)) return accept(pt);
      if (pt.g * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
      lo = pt;
    }
    if (std::abs(hi.alpha - lo.alpha) < 1e-14) break;
  }

  // No strong-Wolfe point found inside the bracket; fall back to the best
  // Armijo-satisfying point if there is one.
  if (armijo_ok(lo) && lo.alpha > 0.0) return accept(lo);
  result.success = false;
  return result;
}

}  // namespace pulseopt
