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
#ifndef PULSEOPT_MATEXP_H_
#define PULSEOPT_MATEXP_H_

#include <optional>
#include <vector>

#include "pulseopt/types.hpp"

namespace pulseopt {

/// Knobs for the scaled-and-squared Taylor exponential. The drop threshold
/// trades a small bias for sparsity: entries below it are zeroed after each
/// multiply and each squaring.
struct ExpOptions {
  double tolerance = 1e-14;       // series truncation, relative
  double drop_threshold = 1e-14;  // sparsity filter, absolute
  int max_squarings = 64;

  void validate() const;
};

/// e^A by scaling A with the smallest power of two that brings the 1-norm
/// to <= 1, summing the Taylor series until the running term falls below
/// tolerance times the accumulated norm, then squaring back up.
/// Throws on non-finite input or if the series needs more than 200 terms.
cx_mat expm(const cx_mat& a, const ExpOptions& opts = {});

/// e^A v without forming e^A: scaled repeated Taylor application to the
/// vector.
cx_vec expm_action(const sp_cx_mat& a, const cx_vec& v,
                   const ExpOptions& opts = {});

/// Propagator and first directional derivative from the 2x2 block
/// triangular exponential of [[H, Hk], [0, H]] scaled by -i*dt:
/// block (1,1) = P = e^{-i H dt}, block (1,2) = D_Hk(P).
struct PropDerivative {
  cx_mat propagator;
  cx_mat derivative;
};
PropDerivative prop_derivative(const sp_cx_mat& h, const sp_cx_mat& hk,
                               double dt, const ExpOptions& opts = {});

/// Propagator with first and second directional derivatives from the 3x3
/// bidiagonal block exponential of [[H, Hk, 0], [0, H, Hj], [0, 0, H]]
/// scaled by -i*dt. Block (1,3) holds half the chained second derivative;
/// `d2` returns twice that block. For the true mixed partial with
/// non-commuting Hk, Hj, add the (1,3) blocks of both operator orders.
struct PropSecondDerivative {
  cx_mat propagator;
  cx_mat dk;  // block (1,2): D_Hk(P)
  cx_mat dj;  // block (2,3): D_Hj(P)
  cx_mat d2;  // 2 x block (1,3)
};
PropSecondDerivative prop_second_derivative(const sp_cx_mat& h,
                                            const sp_cx_mat& hk,
                                            const sp_cx_mat& hj, double dt,
                                            const ExpOptions& opts = {});

/// Augmented block generator for exponential-times-vector actions.
/// Two blocks: [[A, B1], [0, A]]; three blocks: [[A, B1, 0], [0, A, B2],
/// [0, 0, A]]. The exponential applied is e^{-i dt L}.
struct AugmentedBlocks {
  sp_cx_mat generator;           // A, the diagonal block
  sp_cx_mat b1;                  // first superdiagonal block
  std::optional<sp_cx_mat> b2;   // second superdiagonal block (3-block form)
  double dt = 0.0;

  int block_count() const { return b2 ? 3 : 2; }
};

/// Applies the augmented exponential to a stacked vector with v in the
/// bottom slot, never materialising the augmented matrix. Returns the slots
/// top to bottom: for 2 blocks {D_B1(P) v, P v}; for 3 blocks
/// {(1/2) D2 v, D_B2(P) v, P v}.
std::vector<cx_vec> aux_action(const AugmentedBlocks& blocks, const cx_vec& v,
                               const ExpOptions& opts = {});

}  // namespace pulseopt

#endif  // PULSEOPT_MATEXP_H_
