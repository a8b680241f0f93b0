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
#ifndef PULSEOPT_OPTIMIZE_H_
#define PULSEOPT_OPTIMIZE_H_

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pulseopt/grape.hpp"
#include "pulseopt/penalty.hpp"
#include "pulseopt/types.hpp"

namespace pulseopt {

enum class OptimMethod { Gradient, Sr1, Broyden, Lbfgs, Newton };
enum class RegularizerKind { Cholesky, Trm, Rfo };
enum class LineSearchKind { Backtracking, BracketSection, NewtonStep };

struct OptimizerConfig {
  OptimMethod method = OptimMethod::Newton;
  double broyden_phi = 1.0;  // 0 = DFP, 1 = BFGS
  int lbfgs_memory = 20;

  RegularizerKind regularizer = RegularizerKind::Rfo;
  double trm_delta = 1.0;
  double rfo_zeta_max = 1e4;
  double rfo_phi = 0.9;

  LineSearchKind line_search = LineSearchKind::BracketSection;
  double ls_c1 = 1e-4;
  double ls_c2 = 0.9;
  double ls_beta = 0.5;  // backtracking reduction factor
  double ls_tau1 = 3.0;
  double ls_tau2 = 0.1;
  double ls_tau3 = 0.5;

  double grad_inf_tol = 1e-6;
  double fidelity_delta_tol = 0.0;  // disabled when 0
  int max_iterations = 100;

  void validate() const;
};

/// One row per accepted iterate, the initial point included.
struct TraceRow {
  int iteration = 0;
  double fidelity = 0.0;
  double penalty = 0.0;
  double objective = 0.0;
  double grad_inf_norm = 0.0;
  double step_length = 0.0;
  int ls_evals = 0;
  int reg_iters = 0;
  double cond_number = std::numeric_limits<double>::quiet_NaN();
  double wall_ms = 0.0;
};

struct ObjectiveEvaluation {
  double value = 0.0;     // maximised quantity: fidelity minus penalties
  double fidelity = 0.0;  // fidelity part alone
  double penalty = 0.0;   // weighted penalty sum
  rvec gradient;
  std::optional<rmat> hessian;
};

/// Smooth objective for maximisation.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual ObjectiveEvaluation evaluate(const rvec& x, bool need_gradient,
                                       bool need_hessian) = 0;
};

struct OptimizeOutcome {
  rvec x;
  double value = 0.0;
  bool converged = false;
  bool failed = false;  // line-search or regularisation failure
  std::string termination;
  std::vector<TraceRow> trace;
  long value_evals = 0;
  long gradient_evals = 0;
  long hessian_evals = 0;
};

/// Line-search ascent driver over a generic objective. On line-search or
/// regularisation failure the best iterate seen is returned with the
/// failure flag set.
OptimizeOutcome optimize_function(Objective& objective, const rvec& x0,
                                  const OptimizerConfig& config);

/// Optimisation variables: raw Cartesian amplitudes, or per-pair phases
/// with the amplitude profile frozen at its initial values (channels are
/// consumed as (x, y) pairs; K must be even).
enum class VariableMode { Cartesian, PhaseOnly };

struct ControlOptimize {
  ControlSet controls;
  OptimizeOutcome outcome;
};

/// GRAPE driver: maximises the (ensemble-averaged) fidelity minus weighted
/// penalties over the control variables. Penalties act on the optimisation
/// variable vector (amplitudes in Cartesian mode, phases in phase mode).
ControlOptimize optimize_controls(const std::vector<EnsembleMember>& members,
                                  const std::vector<PenaltySpec>& penalties,
                                  const ControlSet& initial,
                                  const OptimizerConfig& config,
                                  VariableMode mode = VariableMode::Cartesian);

}  // namespace pulseopt

#endif  // PULSEOPT_OPTIMIZE_H_
