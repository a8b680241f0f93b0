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
#ifndef PULSEOPT_GRAPE_H_
#define PULSEOPT_GRAPE_H_

#include <complex>
#include <optional>
#include <vector>

#include "pulseopt/control.hpp"
#include "pulseopt/problem.hpp"
#include "pulseopt/types.hpp"

namespace pulseopt {

struct EvalCounts {
  long exponentials = 0;  // slice exponentials and augmented exponentials
  long slice_kernels = 0;
};

/// Fidelity value with its exact derivatives and the cached state
/// trajectories that produced them.
///
/// Index conventions: slice n consumes rho_{n-1} and produces rho_n;
/// the adjoint satisfies chi_n = P_n^dag chi_{n+1} with chi_{N+1} = sigma.
/// forward[q][n] = rho_n (n = 0..N); backward[q][i] = chi_{i+1} (i = 0..N).
/// Gradient and Hessian orderings follow the ControlSet flattening
/// (slice-major, control-minor) and are reported with respect to the
/// normalised amplitudes: the nominal-power chain rule (power for the
/// gradient, power^2 for the Hessian) is already applied.
struct DerivativeBundle {
  FidelityKind kind = FidelityKind::J1;
  cxd overlap{0.0, 0.0};          // mean final overlap <sigma|rho(T)>
  std::vector<cxd> pair_overlaps;
  double value = 0.0;             // J1/J2 value; real part for J0
  cxd value_complex{0.0, 0.0};    // full complex value (J0)
  rvec gradient;
  std::optional<rmat> hessian;    // symmetric K*N x K*N
  std::vector<std::vector<cx_vec>> forward;
  std::vector<std::vector<cx_vec>> backward;
  EvalCounts counts;
};

/// e^{-i (drift + power sum_k c_kn Hk) dt} for slice n (1-based).
cx_mat slice_propagator(const ControlProblem& problem,
                        const ControlSet& controls, int n);

/// Sparse slice generator drift + power sum_k c_kn Hk (n is 1-based).
sp_cx_mat slice_generator(const ControlProblem& problem,
                          const ControlSet& controls, int n);

/// Forward states rho_0..rho_N and backward states chi_1..chi_{N+1} for
/// every state pair, computed with exponential-times-vector actions.
struct Trajectories {
  std::vector<std::vector<cx_vec>> forward;
  std::vector<std::vector<cx_vec>> backward;
};
Trajectories trajectories(const ControlProblem& problem,
                          const ControlSet& controls);

/// Fidelity value only.
DerivativeBundle fidelity(const ControlProblem& problem,
                          const ControlSet& controls);

/// Fidelity and exact gradient (one forward plus one backward pass).
DerivativeBundle gradient(const ControlProblem& problem,
                          const ControlSet& controls);

/// Fidelity, gradient, and exact Hessian. First directional derivatives are
/// recycled from the second-derivative evaluations, so the gradient costs
/// no extra exponentials; block off-diagonal elements reuse them together
/// with the stored slice propagators.
DerivativeBundle hessian(const ControlProblem& problem,
                         const ControlSet& controls);

enum class EvalOrder { Value, Gradient, Hessian };

struct EnsembleMember {
  double weight = 1.0;
  ControlProblem problem;
};

/// Weighted average of value, gradient and (optionally) Hessian across
/// ensemble members. Weights must be positive; they are normalised to sum
/// to one. Members are evaluated independently and reduced in member order.
DerivativeBundle ensemble_evaluate(const std::vector<EnsembleMember>& members,
                                   const ControlSet& controls,
                                   EvalOrder order);

}  // namespace pulseopt

#endif  // PULSEOPT_GRAPE_H_
