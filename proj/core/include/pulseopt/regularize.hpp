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
#ifndef PULSEOPT_REGULARIZE_H_
#define PULSEOPT_REGULARIZE_H_

#include "pulseopt/types.hpp"

namespace pulseopt {

/// Hessian regularisation for fidelity maximisation. The formulas are the
/// positive-definite ones of minimisation applied to -H, so all outputs
/// enforce negative-definite ascent curvature.

/// Iterative Cholesky shift: if -H factorises, sigma = 0; otherwise
/// sigma starts at ||H||_F (minus the minimum diagonal of -H when that is
/// negative) and doubles until -(H - sigma I) factorises.
/// h_reg = H - sigma I. `iterations` counts the extra factorisation
/// attempts beyond the first. Throws when sigma exceeds 1e16 ||H||_F.
struct CholeskyRegularization {
  rmat h_reg;
  double sigma = 0.0;
  int iterations = 0;
};
CholeskyRegularization cholesky_regularize(const rmat& h);

/// Eigenvalue-shift (trust region) regularisation: all ascent-curvature
/// eigenvalues of the result are >= delta, sharing the eigenvectors of H.
rmat trm_regularize(const rmat& h, double delta);

/// Rational-function step: bordered Hessian [[a^2(-H), a g], [a g^T, 0]]
/// with a0 = 1/sqrt(|lambda_min(H)|), shifted to positive semidefiniteness
/// by sigma = max(0, -lambda_min); a shrinks by phi_cond while the
/// regularised top-left block's condition number exceeds zeta_max. Returns
/// the ascent direction from the regularised block plus diagnostics.
/// Throws when a underflows below 1e-12 (conditioning failed).
struct RfoResult {
  rvec direction;
  double cond = 0.0;
  double alpha = 0.0;
  int iterations = 0;
};
RfoResult rfo_regularize(const rmat& h, const rvec& g, double zeta_max,
                         double phi_cond);

}  // namespace pulseopt

#endif  // PULSEOPT_REGULARIZE_H_
