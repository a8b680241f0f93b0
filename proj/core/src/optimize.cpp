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
#include "pulseopt/optimize.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "pulseopt/line_search.hpp"
#include "pulseopt/quasi_newton.hpp"
#include "pulseopt/regularize.hpp"

namespace pulseopt {

void OptimizerConfig::validate() const {
  if (!(ls_c1 > 0.0 && ls_c1 < ls_c2 && ls_c2 < 1.0))
    throw std::invalid_argument("need 0 < c1 < c2 < 1");
  if (!(ls_tau1 > 0.0)) throw std::invalid_argument("tau1 must be > 0");
  if (!(ls_tau2 > 0.0 && ls_tau2 < ls_tau3 && ls_tau3 <= 0.5))
    throw std::invalid_argument("need 0 < tau2 < tau3 <= 1/2");
  if (!(ls_beta > 0.0 && ls_beta < 1.0))
    throw std::invalid_argument("backtracking beta must be in (0, 1)");
  if (!(rfo_zeta_max > 1.0))
    throw std::invalid_argument("zeta_max must be > 1");
  if (!(rfo_phi > 0.0 && rfo_phi < 1.0))
    throw std::invalid_argument("rfo phi must be in (0, 1)");
  if (!(trm_delta > 0.0)) throw std::invalid_argument("trm delta must be > 0");
  if (broyden_phi < 0.0 || broyden_phi > 1.0)
    throw std::invalid_argument("broyden phi must be in [0, 1]");
  if (lbfgs_memory < 1) throw std::invalid_argument("lbfgs memory must be >= 1");
  if (max_iterations < 0)
    throw std::invalid_argument("max_iterations must be >= 0");
  if (grad_inf_tol < 0.0 || fidelity_delta_tol < 0.0)
    throw std::invalid_argument("tolerances must be >= 0");
}

namespace {

using Clock = std::chrono::steady_clock;

double symmetric_condition(const rmat& m) {
  Eigen::SelfAdjointEigenSolver<rmat> eig(m);
  const double lo = eig.eigenvalues().cwiseAbs().minCoeff();
  const double hi = eig.eigenvalues().cwiseAbs().maxCoeff();
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

struct Direction {
  rvec d;
  int reg_iters = 0;
  double cond = std::numeric_limits<double>::quiet_NaN();
};

}  // namespace

OptimizeOutcome optimize_function(Objective& objective, const rvec& x0,
                                  const OptimizerConfig& config) {
  config.validate();
  const int dim = static_cast<int>(x0.size());
  const bool needs_hessian = config.method == OptimMethod::Newton;

  OptimizeOutcome out;
  auto evaluate = [&](const rvec& x, bool grad, bool hess) {
    ++out.value_evals;
    if (grad) ++out.gradient_evals;
    if (hess) ++out.hessian_evals;
    return objective.evaluate(x, grad, hess);
  };

  rvec x = x0;
  ObjectiveEvaluation eval = evaluate(x, true, needs_hessian);

  rvec best_x = x;
  double best_value = eval.value;

  // Quasi-Newton state approximates the negated Hessian, so it stays
  // positive definite near a maximiser; gradient changes are negated on
  // update.
  rmat curvature = rmat::Identity(dim, dim);
  LbfgsHistory history;

  const auto t_start = Clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(Clock::now() - t_start)
        .count();
  };
  auto push_row = [&](int iteration, double alpha, int ls_evals, int reg_iters,
                      double cond) {
    TraceRow row;
    row.iteration = iteration;
    row.fidelity = eval.fidelity;
    row.penalty = eval.penalty;
    row.objective = eval.value;
    row.grad_inf_norm = eval.gradient.lpNorm<Eigen::Infinity>();
    row.step_length = alpha;
    row.ls_evals = ls_evals;
    row.reg_iters = reg_iters;
    row.cond_number = cond;
    row.wall_ms = elapsed_ms();
    out.trace.push_back(row);
  };
  push_row(0, 0.0, 0, 0, std::numeric_limits<double>::quiet_NaN());

  int iter = 0;
  double prev_value = eval.value;
  while (true) {
    const double grad_inf = eval.gradient.lpNorm<Eigen::Infinity>();
    if (grad_inf < config.grad_inf_tol) {
      out.converged = true;
      out.termination = "gradient tolerance reached";
      break;
    }
    if (config.fidelity_delta_tol > 0.0 && iter > 0 &&
        std::abs(eval.value - prev_value) < config.fidelity_delta_tol) {
      out.converged = true;
      out.termination = "objective change below tolerance";
      break;
    }
    if (iter >= config.max_iterations) {
      out.termination = "maximum iterations reached";
      break;
    }

    // Search direction.
    Direction dir;
    bool reg_failed = false;
    try {
      switch (config.method) {
        case OptimMethod::Gradient:
          dir.d = eval.gradient;
          break;
        case OptimMethod::Sr1:
        case OptimMethod::Broyden: {
          dir.d = Eigen::LDLT<rmat>(curvature).solve(eval.gradient);
          if (!dir.d.allFinite() || eval.gradient.dot(dir.d) <= 0.0) {
            curvature = rmat::Identity(dim, dim);
            dir.d = eval.gradient;
          }
          break;
        }
        case OptimMethod::Lbfgs: {
          dir.d = lbfgs_direction(history, eval.gradient, config.lbfgs_memory);
          if (!dir.d.allFinite() || eval.gradient.dot(dir.d) <= 0.0) {
            history.clear();
            dir.d = eval.gradient;
          }
          break;
        }
        case OptimMethod::Newton: {
          const rmat& h = *eval.hessian;
          switch (config.regularizer) {
            case RegularizerKind::Cholesky: {
              auto reg = cholesky_regularize(h);
              dir.d = Eigen::LLT<rmat>(rmat(-reg.h_reg)).solve(eval.gradient);
              dir.reg_iters = reg.iterations;
              dir.cond = symmetric_condition(reg.h_reg);
              break;
            }
            case RegularizerKind::Trm: {
              const rmat h_reg = trm_regularize(h, config.trm_delta);
              dir.d = Eigen::LLT<rmat>(rmat(-h_reg)).solve(eval.gradient);
              dir.reg_iters = 0;
              dir.cond = symmetric_condition(h_reg);
              break;
            }
            case RegularizerKind::Rfo: {
              auto reg = rfo_regularize(h, eval.gradient, config.rfo_zeta_max,
                                        config.rfo_phi);
              dir.d = reg.direction;
              dir.reg_iters = reg.iterations;
              dir.cond = reg.cond;
              break;
            }
          }
          break;
        }
      }
    } catch (const std::runtime_error&) {
      reg_failed = true;
    }
    if (reg_failed || !dir.d.allFinite()) {
      out.failed = true;
      out.termination = "regularisation failed";
      break;
    }
    if (eval.gradient.dot(dir.d) <= 0.0) {
      dir.d = eval.gradient;  // last-resort ascent fallback
    }

    // Step length.
    double alpha = 1.0;
    int ls_evals = 0;
    ObjectiveEvaluation next;
    bool have_next = false;
    if (config.line_search == LineSearchKind::NewtonStep) {
      alpha = 1.0;
    } else if (config.line_search == LineSearchKind::Backtracking) {
      auto value_only = [&](const rvec& xt, double) {
        return evaluate(xt, false, false).value;
      };
      auto res = backtracking_search(value_only, x, dir.d, eval.gradient,
                                     eval.value, 1.0, config.ls_beta,
                                     config.ls_c1);
      ls_evals = res.value_evals;
      if (!res.success) {
        out.failed = true;
        out.termination = "line search failed";
        break;
      }
      alpha = res.alpha;
    } else {
      // Cache the full evaluation at each trial step so the accepted one
      // can seed the next iterate without re-evaluating.
      double cached_alpha = std::numeric_limits<double>::quiet_NaN();
      ObjectiveEvaluation cached;
      auto value_grad = [&](const rvec& xt, double at) {
        cached = evaluate(xt, true, false);
        cached_alpha = at;
        return std::make_pair(cached.value, cached.gradient);
      };
      BracketSectionParams params;
      params.c1 = config.ls_c1;
      params.c2 = config.ls_c2;
      params.tau1 = config.ls_tau1;
      params.tau2 = config.ls_tau2;
      params.tau3 = config.ls_tau3;
      auto res = bracket_section_search(value_grad, x, dir.d, eval.value,
                                        eval.gradient, 1.0, params);
      ls_evals = res.value_evals;
      if (!res.success) {
        out.failed = true;
        out.termination = "line search failed";
        break;
      }
      alpha = res.alpha;
      if (!needs_hessian && alpha == cached_alpha) {
        next = std::move(cached);
        have_next = true;
      }
    }

    const rvec x_new = x + alpha * dir.d;
    if (!have_next) next = evaluate(x_new, true, needs_hessian);

    // Quasi-Newton bookkeeping with negated gradient differences.
    const rvec dx = x_new - x;
    const rvec dg_neg = -(next.gradient - eval.gradient);
    switch (config.method) {
      case OptimMethod::Sr1:
        curvature = sr1_update(curvature, dx, dg_neg).matrix;
        break;
      case OptimMethod::Broyden:
        curvature = broyden_update(curvature, dx, dg_neg, config.broyden_phi)
                        .matrix;
        break;
      case OptimMethod::Lbfgs:
        if (dx.dot(dg_neg) > 1e-8 * dx.norm() * dg_neg.norm()) {
          history.emplace_back(dx, dg_neg);
          while (static_cast<int>(history.size()) > config.lbfgs_memory)
            history.pop_front();
        }
        break;
      default:
        break;
    }

    x = x_new;
    prev_value = eval.value;
    eval = std::move(next);
    ++iter;
    push_row(iter, alpha, ls_evals, dir.reg_iters, dir.cond);
    if (eval.value > best_value) {
      best_value = eval.value;
      best_x = x;
    }
  }

  if (eval.value >= best_value) {
    out.x = x;
    out.value = eval.value;
  } else {
    out.x = best_x;
    out.value = best_value;
  }
  return out;
}

namespace {

// Fidelity-minus-penalties objective over control variables.
class GrapeObjective : public Objective {
 public:
  GrapeObjective(const std::vector<EnsembleMember>& members,
                 const std::vector<PenaltySpec>& penalties,
                 const ControlSet& initial, VariableMode mode)
      : members_(members),
        penalties_(penalties),
        template_(initial),
        mode_(mode) {
    if (mode_ == VariableMode::PhaseOnly) {
      if (template_.num_controls() % 2 != 0)
        throw std::invalid_argument(
            "phase-only optimisation needs an even number of control "
            "channels, consumed as (x, y) pairs");
      const int pairs = template_.num_controls() / 2;
      const int n = template_.num_slices();
      radius_.resize(pairs, n);
      for (int p = 0; p < pairs; ++p)
        for (int s = 0; s < n; ++s)
          radius_(p, s) = std::hypot(template_.amplitudes(2 * p, s),
                                     template_.amplitudes(2 * p + 1, s));
    }
  }

  int variable_count() const {
    if (mode_ == VariableMode::Cartesian)
      return template_.num_controls() * template_.num_slices();
    return template_.num_controls() / 2 * template_.num_slices();
  }

  rvec initial_variables() const {
    if (mode_ == VariableMode::Cartesian) return template_.flatten();
    const int pairs = template_.num_controls() / 2;
    const int n = template_.num_slices();
    rvec phases(pairs * n);
    for (int s = 0; s < n; ++s)
      for (int p = 0; p < pairs; ++p)
        phases[s * pairs + p] = std::atan2(template_.amplitudes(2 * p + 1, s),
                                           template_.amplitudes(2 * p, s));
    return phases;
  }

  ControlSet controls_for(const rvec& x) const {
    ControlSet controls = template_;
    if (mode_ == VariableMode::Cartesian) {
      controls.set_from_flat(x);
      return controls;
    }
    const int pairs = template_.num_controls() / 2;
    const int n = template_.num_slices();
    for (int s = 0; s < n; ++s)
      for (int p = 0; p < pairs; ++p) {
        const double phi = x[s * pairs + p];
        controls.amplitudes(2 * p, s) = radius_(p, s) * std::cos(phi);
        controls.amplitudes(2 * p + 1, s) = radius_(p, s) * std::sin(phi);
      }
    return controls;
  }

  ObjectiveEvaluation evaluate(const rvec& x, bool need_gradient,
                               bool need_hessian) override {
    const ControlSet controls = controls_for(x);
    const EvalOrder order = need_hessian  ? EvalOrder::Hessian
                            : need_gradient ? EvalOrder::Gradient
                                            : EvalOrder::Value;
    DerivativeBundle bundle = ensemble_evaluate(members_, controls, order);

    ObjectiveEvaluation eval;
    eval.fidelity = bundle.value;
    if (mode_ == VariableMode::Cartesian) {
      if (!penalties_.empty()) {
        PenaltyEval pen = evaluate_penalties(penalties_, controls);
        eval.penalty = pen.value;
        if (need_gradient) eval.gradient = bundle.gradient - pen.gradient;
        if (need_hessian) eval.hessian = *bundle.hessian - pen.hessian;
      } else {
        if (need_gradient) eval.gradient = bundle.gradient;
        if (need_hessian) eval.hessian = bundle.hessian;
      }
    } else {
      if (need_gradient) eval.gradient = phase_gradient(x, bundle.gradient);
      if (need_hessian)
        eval.hessian = phase_hessian(x, bundle.gradient, *bundle.hessian);
      if (!penalties_.empty()) {
        // Penalties act on the phase variables themselves.
        ControlSet phase_view = phase_controls(x);
        PenaltyEval pen = evaluate_penalties(penalties_, phase_view);
        eval.penalty = pen.value;
        if (need_gradient) eval.gradient -= pen.gradient;
        if (need_hessian) *eval.hessian -= pen.hessian;
      }
    }
    eval.value = eval.fidelity - eval.penalty;
    return eval;
  }

 private:
  ControlSet phase_controls(const rvec& x) const {
    const int pairs = template_.num_controls() / 2;
    ControlSet view;
    view.amplitudes =
        Eigen::Map<const rmat>(x.data(), pairs, template_.num_slices());
    view.dt = template_.dt;
    view.power = template_.power;
    return view;
  }

  rvec phase_gradient(const rvec& x, const rvec& cart_grad) const {
    const int pairs = template_.num_controls() / 2;
    const int n = template_.num_slices();
    const int k_max = template_.num_controls();
    const ControlSet controls = controls_for(x);
    rvec grad(pairs * n);
    for (int s = 0; s < n; ++s)
      for (int p = 0; p < pairs; ++p) {
        const double cx = controls.amplitudes(2 * p, s);
        const double cy = controls.amplitudes(2 * p + 1, s);
        const double jx = cart_grad[s * k_max + 2 * p];
        const double jy = cart_grad[s * k_max + 2 * p + 1];
        grad[s * pairs + p] = cx * jy - cy * jx;
      }
    return grad;
  }

  rmat phase_hessian(const rvec& x, const rvec& cart_grad,
                     const rmat& cart_hess) const {
    const int pairs = template_.num_controls() / 2;
    const int n = template_.num_slices();
    const int k_max = template_.num_controls();
    const ControlSet controls = controls_for(x);
    // Jacobian columns dc/dphi are (-y, x) per pair and slice; the only
    // second-order term is the in-slice radial correction on the diagonal.
    rmat hess(pairs * n, pairs * n);
    for (int s = 0; s < n; ++s)
      for (int p = 0; p < pairs; ++p) {
        const double ax = -controls.amplitudes(2 * p + 1, s);
        const double ay = controls.amplitudes(2 * p, s);
        for (int t = 0; t < n; ++t)
          for (int q = 0; q < pairs; ++q) {
            const double bx = -controls.amplitudes(2 * q + 1, t);
            const double by = controls.amplitudes(2 * q, t);
            double value =
                ax * cart_hess(s * k_max + 2 * p, t * k_max + 2 * q) * bx +
                ax * cart_hess(s * k_max + 2 * p, t * k_max + 2 * q + 1) * by +
                ay * cart_hess(s * k_max + 2 * p + 1, t * k_max + 2 * q) * bx +
                ay * cart_hess(s * k_max + 2 * p + 1, t * k_max + 2 * q + 1) *
                    by;
            if (s == t && p == q) {
              const double cx = controls.amplitudes(2 * p, s);
              const double cy = controls.amplitudes(2 * p + 1, s);
              value -= cx * cart_grad[s * k_max + 2 * p] +
                       cy * cart_grad[s * k_max + 2 * p + 1];
            }
            hess(s * pairs + p, t * pairs + q) = value;
          }
      }
    return hess;
  }

  const std::vector<EnsembleMember>& members_;
  const std::vector<PenaltySpec>& penalties_;
  ControlSet template_;
  VariableMode mode_;
  rmat radius_;
};

}  // namespace

ControlOptimize optimize_controls(const std::vector<EnsembleMember>& members,
                                  const std::vector<PenaltySpec>& penalties,
                                  const ControlSet& initial,
                                  const OptimizerConfig& config,
                                  VariableMode mode) {
  initial.validate();
  if (members.empty())
    throw std::invalid_argument("optimize_controls: empty ensemble");
  GrapeObjective objective(members, penalties, initial, mode);
  OptimizeOutcome outcome =
      optimize_function(objective, objective.initial_variables(), config);
  ControlOptimize result;
  result.controls = objective.controls_for(outcome.x);
  result.outcome = std::move(outcome);
  return result;
}

}  // namespace pulseopt
