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
#ifndef PULSEOPT_PROBLEM_H_
#define PULSEOPT_PROBLEM_H_

#include <vector>

#include "pulseopt/spinop.hpp"
#include "pulseopt/types.hpp"

namespace pulseopt {

/// State-transfer fidelity functionals. J0 is the raw complex overlap,
/// J1 its real part, J2 its modulus square. More than one state pair means
/// the arithmetic mean of per-pair values (multi-state mapping).
enum class FidelityKind { J0, J1, J2 };

/// How the evaluators propagate. Dense exponentiates slice generators as
/// dense matrices (fastest for small Liouville dimensions); MatrixFree
/// uses exponential-times-vector actions throughout. Auto switches on the
/// problem dimension.
enum class PropagationPath { Auto, Dense, MatrixFree };

/// A bilinear control problem in Liouville space: drift generator
/// (including the relaxation term), control generators, and one or more
/// normalised initial/target state pairs.
struct ControlProblem {
  Superoperator drift;                   // includes the -i*R relaxation term
  std::vector<Superoperator> controls;   // K commutation superoperators
  std::vector<cx_vec> initial_states;
  std::vector<cx_vec> target_states;
  FidelityKind kind = FidelityKind::J1;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> commutes;  // K x K
  PropagationPath path = PropagationPath::Auto;

  int dim() const { return drift.dim(); }
  int num_controls() const { return static_cast<int>(controls.size()); }
  int num_pairs() const { return static_cast<int>(initial_states.size()); }

  void validate() const;
};

/// Assembles a problem and precomputes the control commutativity table
/// with threshold ||[Hk, Hj]||_1 < 1e-12.
ControlProblem make_control_problem(Superoperator drift,
                                    std::vector<Superoperator> controls,
                                    std::vector<cx_vec> initial_states,
                                    std::vector<cx_vec> target_states,
                                    FidelityKind kind);

}  // namespace pulseopt

#endif  // PULSEOPT_PROBLEM_H_
