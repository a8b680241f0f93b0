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
#ifndef PULSEOPT_QUASI_NEWTON_H_
#define PULSEOPT_QUASI_NEWTON_H_

#include <deque>
#include <utility>

#include "pulseopt/types.hpp"

namespace pulseopt {

/// Curvature-approximation update result. `skipped` marks a breakdown or
/// curvature-condition skip that left the matrix unchanged.
struct QuasiNewtonUpdate {
  rmat matrix;
  bool skipped = false;
};

/// Symmetric rank-1 update: B' = B + y y^T / <y, dx> with y = dg - B dx.
/// Skipped when |<y, dx>| < 1e-8 ||dx|| ||y|| (vanishing denominator).
QuasiNewtonUpdate sr1_update(const rmat& b, const rvec& dx, const rvec& dg);

/// Broyden-family rank-2 update, phi = 0 gives DFP and phi = 1 gives BFGS.
/// Skipped unless the curvature condition <dx, dg> > 1e-8 ||dx|| ||dg||
/// holds. The secant equation B' dx = dg holds after any accepted update.
QuasiNewtonUpdate broyden_update(const rmat& b, const rvec& dx, const rvec& dg,
                                 double phi);

/// Dual updates for the inverse approximation, Binv' dg = dx, same skip
/// rule.
QuasiNewtonUpdate inverse_broyden_update(const rmat& binv, const rvec& dx,
                                         const rvec& dg, double phi);

/// History pairs (dx, dy) for the limited-memory two-loop recursion, in
/// descent convention: for fidelity maximisation callers store
/// dy = -(g_new - g_old) so the implied approximation is positive definite.
using LbfgsHistory = std::deque<std::pair<rvec, rvec>>;

/// Standard two-loop recursion with the scaling matrix
/// H0 = (<dx, dy> / <dy, dy>) I from the most recent pair. Uses at most the
/// last m pairs. Empty history returns g itself.
rvec lbfgs_direction(const LbfgsHistory& history, const rvec& g, int m);

}  // namespace pulseopt

#endif  // PULSEOPT_QUASI_NEWTON_H_
