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
#include "pulseopt/grape.hpp"

#include <cmath>
#include <stdexcept>

#include "pulseopt/matexp.hpp"
#include "pulseopt/threading.hpp"

namespace pulseopt {

namespace {

constexpr int kMaxTaylorTerms = 200;
// Above this Liouville dimension the evaluators switch from dense slice
// exponentials to matrix-free exponential actions.
constexpr int kDenseDimLimit = 4096;

bool use_dense_path(const ControlProblem& problem) {
  switch (problem.path) {
    case PropagationPath::Dense:
      return true;
    case PropagationPath::MatrixFree:
      return false;
    case PropagationPath::Auto:
    default:
      return problem.dim() <= kDenseDimLimit;
  }
}

int pair_count(int k) { return k * (k - 1) / 2; }

// Index of the unordered pair (a, b), a < b, in lexicographic order.
int pair_index(int a, int b, int k) {
  return a * k - a * (a + 1) / 2 + (b - a - 1);
}

// Per-slice propagator and directional-derivative blocks, all with respect
// to the unscaled control generators (the nominal-power chain rule is
// applied during element assembly).
struct SliceBlocks {
  cx_mat p;
  std::vector<cx_mat> dk;        // K
  std::vector<cx_mat> d2_diag;   // K   (true second partials)
  std::vector<cx_mat> d2_mixed;  // K(K-1)/2, pair order (a<b), true mixed
};

// Fused block-Taylor evaluation of one slice generator together with all
// first (and optionally second) directional derivatives. The diagonal
// blocks of every augmented matrix are identical, so the Taylor terms and
// squaring stages of the propagator are shared across all directions.
SliceBlocks slice_blocks(const sp_cx_mat& gen,
                         const std::vector<sp_cx_mat>& ctrl_ops, double dt,
                         const Eigen::Matrix<bool, Eigen::Dynamic,
                                             Eigen::Dynamic>& commutes,
                         bool with_second, const ExpOptions& opts) {
  const int n = static_cast<int>(gen.rows());
  const int nk = static_cast<int>(ctrl_ops.size());
  const int np = with_second ? pair_count(nk) : 0;

  const sp_cx_mat a0 = (-ci * dt) * gen;
  std::vector<sp_cx_mat> b0(nk);
  double bnorm = 0.0;
  for (int k = 0; k < nk; ++k) {
    b0[k] = (-ci * dt) * ctrl_ops[k];
    bnorm = std::max(bnorm, one_norm(b0[k]));
  }
  const double norm = one_norm(a0) + bnorm;
  int m = 0;
  {
    double x = norm;
    while (x > 1.0) {
      x *= 0.5;
      ++m;
      if (m > opts.max_squarings)
        throw std::runtime_error("slice_blocks: squaring cap exceeded");
    }
  }
  const double scale = std::ldexp(1.0, -m);
  const sp_cx_mat a = a0 * scale;
  std::vector<sp_cx_mat> b(nk);
  for (int k = 0; k < nk; ++k) b[k] = b0[k] * scale;

  // Taylor sums and running terms.
  cx_mat sp_ = cx_mat::Identity(n, n);
  cx_mat tp = cx_mat::Identity(n, n);
  std::vector<cx_mat> sd(nk, cx_mat::Zero(n, n)), td(nk, cx_mat::Zero(n, n));
  // Chained-integral (1,3) blocks: per control (k,k), then per ordered
  // mixed need: (a,b) for every pair, plus (b,a) for non-commuting pairs.
  std::vector<cx_mat> sdiag, tdiag, sab, tab, sba, tba;
  if (with_second) {
    sdiag.assign(nk, cx_mat::Zero(n, n));
    tdiag.assign(nk, cx_mat::Zero(n, n));
    sab.assign(np, cx_mat::Zero(n, n));
    tab.assign(np, cx_mat::Zero(n, n));
    sba.assign(np, cx_mat::Zero(n, n));
    tba.assign(np, cx_mat::Zero(n, n));
  }

  cx_mat tmp(n, n);
  int it = 0;
  while (true) {
    ++it;
    if (it > kMaxTaylorTerms)
      throw std::runtime_error("slice_blocks: Taylor series failed to converge");
    const double inv = 1.0 / it;
    if (with_second) {
      for (int k = 0; k < nk; ++k) {
        tmp.noalias() = a * tdiag[k];
        tmp.noalias() += b[k] * td[k];
        tdiag[k] = tmp * inv;
      }
      for (int x = 0; x < nk; ++x)
        for (int y = x + 1; y < nk; ++y) {
          const int pi = pair_index(x, y, nk);
          tmp.noalias() = a * tab[pi];
          tmp.noalias() += b[x] * td[y];
          tab[pi] = tmp * inv;
          if (!commutes(x, y)) {
            tmp.noalias() = a * tba[pi];
            tmp.noalias() += b[y] * td[x];
            tba[pi] = tmp * inv;
          }
        }
    }
    for (int k = 0; k < nk; ++k) {
      tmp.noalias() = a * td[k];
      tmp.noalias() += b[k] * tp;
      td[k] = tmp * inv;
    }
    tmp.noalias() = a * tp;
    tp = tmp * inv;

    double tnorm = one_norm(tp);
    double snorm = one_norm(sp_);
    drop_small_entries(tp, opts.drop_threshold);
    sp_ += tp;
    for (int k = 0; k < nk; ++k) {
      drop_small_entries(td[k], opts.drop_threshold);
      sd[k] += td[k];
      tnorm = std::max(tnorm, one_norm(td[k]));
      snorm = std::max(snorm, one_norm(sd[k]));
    }
    if (with_second) {
      for (int k = 0; k < nk; ++k) {
        drop_small_entries(tdiag[k], opts.drop_threshold);
        sdiag[k] += tdiag[k];
        tnorm = std::max(tnorm, one_norm(tdiag[k]));
      }
      for (int pi = 0; pi < np; ++pi) {
        drop_small_entries(tab[pi], opts.drop_threshold);
        sab[pi] += tab[pi];
        drop_small_entries(tba[pi], opts.drop_threshold);
        sba[pi] += tba[pi];
        tnorm = std::max({tnorm, one_norm(tab[pi]), one_norm(tba[pi])});
      }
    }
    if (tnorm <= opts.tolerance * std::max(snorm, 1.0)) break;
  }

  // Squaring stages; every new block is formed from the previous stage.
  std::vector<cx_mat> nd(nk, cx_mat(n, n));
  std::vector<cx_mat> ndiag, nab, nba;
  if (with_second) {
    ndiag.assign(nk, cx_mat(n, n));
    nab.assign(np, cx_mat(n, n));
    nba.assign(np, cx_mat(n, n));
  }
  cx_mat npmat(n, n);
  for (int sq = 0; sq < m; ++sq) {
    if (with_second) {
      for (int k = 0; k < nk; ++k) {
        ndiag[k].noalias() = sp_ * sdiag[k];
        ndiag[k].noalias() += sd[k] * sd[k];
        ndiag[k].noalias() += sdiag[k] * sp_;
      }
      for (int x = 0; x < nk; ++x)
        for (int y = x + 1; y < nk; ++y) {
          const int pi = pair_index(x, y, nk);
          nab[pi].noalias() = sp_ * sab[pi];
          nab[pi].noalias() += sd[x] * sd[y];
          nab[pi].noalias() += sab[pi] * sp_;
          if (!commutes(x, y)) {
            nba[pi].noalias() = sp_ * sba[pi];
            nba[pi].noalias() += sd[y] * sd[x];
            nba[pi].noalias() += sba[pi] * sp_;
          }
        }
    }
    for (int k = 0; k < nk; ++k) {
      nd[k].noalias() = sp_ * sd[k];
      nd[k].noalias() += sd[k] * sp_;
    }
    npmat.noalias() = sp_ * sp_;
    sp_.swap(npmat);
    drop_small_entries(sp_, opts.drop_threshold);
    for (int k = 0; k < nk; ++k) {
      sd[k].swap(nd[k]);
      drop_small_entries(sd[k], opts.drop_threshold);
    }
    if (with_second) {
      for (int k = 0; k < nk; ++k) {
        sdiag[k].swap(ndiag[k]);
        drop_small_entries(sdiag[k], opts.drop_threshold);
      }
      for (int pi = 0; pi < np; ++pi) {
        sab[pi].swap(nab[pi]);
        drop_small_entries(sab[pi], opts.drop_threshold);
        sba[pi].swap(nba[pi]);
        drop_small_entries(sba[pi], opts.drop_threshold);
      }
    }
  }

  SliceBlocks out;
  out.p = std::move(sp_);
  out.dk = std::move(sd);
  if (with_second) {
    out.d2_diag.resize(nk);
    for (int k = 0; k < nk; ++k) out.d2_diag[k] = 2.0 * sdiag[k];
    out.d2_mixed.resize(np);
    for (int x = 0; x < nk; ++x)
      for (int y = x + 1; y < nk; ++y) {
        const int pi = pair_index(x, y, nk);
        // The true mixed partial sums both chained-integral orders; they
        // coincide when the control generators commute.
        if (commutes(x, y))
          out.d2_mixed[pi] = 2.0 * sab[pi];
        else
          out.d2_mixed[pi] = sab[pi] + sba[pi];
      }
  }
  return out;
}

struct EvalSetup {
  int num_controls = 0;
  int num_slices = 0;
  int dim = 0;
  int num_pairs = 0;
  double power = 0.0;
  std::vector<sp_cx_mat> generators;       // per slice
  std::vector<sp_cx_mat> ctrl_matrices;    // unscaled control generators
};

EvalSetup make_setup(const ControlProblem& problem, const ControlSet& controls) {
  problem.validate();
  controls.validate();
  if (problem.num_controls() != controls.num_controls())
    throw std::invalid_argument("control channel count mismatch");
  for (const auto& s : problem.initial_states)
    if (s.size() != problem.dim())
      throw std::invalid_argument("state dimension mismatch");

  EvalSetup setup;
  setup.num_controls = controls.num_controls();
  setup.num_slices = controls.num_slices();
  setup.dim = problem.dim();
  setup.num_pairs = problem.num_pairs();
  setup.power = controls.power;
  setup.ctrl_matrices.reserve(setup.num_controls);
  for (const auto& c : problem.controls) setup.ctrl_matrices.push_back(c.matrix);
  setup.generators.resize(setup.num_slices);
  for (int n = 0; n < setup.num_slices; ++n) {
    sp_cx_mat gen = problem.drift.matrix;
    for (int k = 0; k < setup.num_controls; ++k) {
      const double amp = controls.power * controls.amplitudes(k, n);
      if (amp != 0.0) gen = gen + cxd(amp) * setup.ctrl_matrices[k];
    }
    gen.makeCompressed();
    setup.generators[n] = std::move(gen);
  }
  return setup;
}

void propagate_states(const ControlProblem& problem, const EvalSetup& setup,
                      const std::vector<cx_mat>* dense_props, double dt,
                      DerivativeBundle& bundle) {
  const int N = setup.num_slices;
  bundle.forward.resize(setup.num_pairs);
  bundle.backward.resize(setup.num_pairs);
  for (int q = 0; q < setup.num_pairs; ++q) {
    auto& fwd = bundle.forward[q];
    auto& bwd = bundle.backward[q];
    fwd.resize(N + 1);
    bwd.resize(N + 1);
    fwd[0] = problem.initial_states[q];
    bwd[N] = problem.target_states[q];
    if (dense_props) {
      for (int n = 0; n < N; ++n) fwd[n + 1] = (*dense_props)[n] * fwd[n];
      for (int n = N - 1; n >= 0; --n)
        bwd[n] = (*dense_props)[n].adjoint() * bwd[n + 1];
    } else {
      for (int n = 0; n < N; ++n) {
        const sp_cx_mat step = (-ci * dt) * setup.generators[n];
        fwd[n + 1] = expm_action(step, fwd[n]);
      }
      for (int n = N - 1; n >= 0; --n) {
        // Adjoint of the forward step: (e^{-i dt A})^dag = e^{+i dt A^dag}.
        const sp_cx_mat step =
            sp_cx_mat((-ci * dt) * setup.generators[n]).adjoint();
        bwd[n] = expm_action(step, bwd[n + 1]);
      }
    }
  }
}

void finalize_value(const ControlProblem& problem, DerivativeBundle& bundle) {
  bundle.kind = problem.kind;
  const int q_max = static_cast<int>(bundle.forward.size());
  bundle.pair_overlaps.resize(q_max);
  cxd mean_overlap(0.0, 0.0);
  double mean_value = 0.0;
  for (int q = 0; q < q_max; ++q) {
    const cxd f = problem.target_states[q].dot(bundle.forward[q].back());
    bundle.pair_overlaps[q] = f;
    mean_overlap += f;
    switch (problem.kind) {
      case FidelityKind::J0:
      case FidelityKind::J1:
        mean_value += f.real();
        break;
      case FidelityKind::J2:
        mean_value += std::norm(f);
        break;
    }
  }
  mean_overlap /= static_cast<double>(q_max);
  mean_value /= static_cast<double>(q_max);
  bundle.overlap = mean_overlap;
  bundle.value_complex =
      problem.kind == FidelityKind::J0 ? mean_overlap : cxd(mean_value, 0.0);
  bundle.value = mean_value;
}

// Maps a raw bilinear overlap derivative to the requested fidelity kind.
double map_first(FidelityKind kind, cxd gamma, cxd f) {
  switch (kind) {
    case FidelityKind::J0:
    case FidelityKind::J1:
      return gamma.real();
    case FidelityKind::J2:
      return 2.0 * (gamma * std::conj(f)).real();
  }
  return 0.0;
}

double map_second(FidelityKind kind, cxd delta, cxd ga, cxd gb, cxd f) {
  switch (kind) {
    case FidelityKind::J0:
    case FidelityKind::J1:
      return delta.real();
    case FidelityKind::J2:
      return 2.0 * (delta * std::conj(f)).real() +
             2.0 * (ga * std::conj(gb)).real();
  }
  return 0.0;
}

}  // namespace

void ControlProblem::validate() const {
  if (drift.matrix.rows() != drift.matrix.cols())
    throw std::invalid_argument("drift superoperator must be square");
  const int d = dim();
  for (const auto& c : controls)
    if (c.dim() != d)
      throw std::invalid_argument("control superoperator dimension mismatch");
  if (initial_states.empty() ||
      initial_states.size() != target_states.size())
    throw std::invalid_argument(
        "need matching nonempty initial and target state lists");
  for (const auto& s : initial_states)
    if (s.size() != d || std::abs(s.norm() - 1.0) > 1e-12)
      throw std::invalid_argument("initial states must be normalised, dim d");
  for (const auto& s : target_states)
    if (s.size() != d || std::abs(s.norm() - 1.0) > 1e-12)
      throw std::invalid_argument("target states must be normalised, dim d");
  const int k = num_controls();
  if (commutes.rows() != k || commutes.cols() != k)
    throw std::invalid_argument("commutes table must be K x K");
}

ControlProblem make_control_problem(Superoperator drift,
                                    std::vector<Superoperator> controls,
                                    std::vector<cx_vec> initial_states,
                                    std::vector<cx_vec> target_states,
                                    FidelityKind kind) {
  ControlProblem problem;
  problem.drift = std::move(drift);
  problem.controls = std::move(controls);
  problem.initial_states = std::move(initial_states);
  problem.target_states = std::move(target_states);
  problem.kind = kind;
  const int k = problem.num_controls();
  problem.commutes.resize(k, k);
  for (int a = 0; a < k; ++a) {
    problem.commutes(a, a) = true;
    for (int b = a + 1; b < k; ++b) {
      const cx_mat ha = problem.controls[a].matrix.toDense();
      const cx_mat hb = problem.controls[b].matrix.toDense();
      const double comm = one_norm(cx_mat(ha * hb - hb * ha));
      problem.commutes(a, b) = problem.commutes(b, a) = comm < 1e-12;
    }
  }
  problem.validate();
  return problem;
}

sp_cx_mat slice_generator(const ControlProblem& problem,
                          const ControlSet& controls, int n) {
  if (n < 1 || n > controls.num_slices())
    throw std::out_of_range("slice index out of range");
  EvalSetup setup = make_setup(problem, controls);
  return setup.generators[n - 1];
}

cx_mat slice_propagator(const ControlProblem& problem,
                        const ControlSet& controls, int n) {
  const sp_cx_mat gen = slice_generator(problem, controls, n);
  return expm(cx_mat((-ci * controls.dt) * gen.toDense()));
}

Trajectories trajectories(const ControlProblem& problem,
                          const ControlSet& controls) {
  EvalSetup setup = make_setup(problem, controls);
  DerivativeBundle bundle;
  propagate_states(problem, setup, nullptr, controls.dt, bundle);
  return Trajectories{std::move(bundle.forward), std::move(bundle.backward)};
}

DerivativeBundle fidelity(const ControlProblem& problem,
                          const ControlSet& controls) {
  EvalSetup setup = make_setup(problem, controls);
  DerivativeBundle bundle;
  const int N = setup.num_slices;
  if (use_dense_path(problem)) {
    std::vector<cx_mat> props(N);
    parallel_for(0, N, [&](int n) {
      props[n] =
          expm(cx_mat((-ci * controls.dt) * setup.generators[n].toDense()));
    });
    bundle.counts.exponentials += N;
    propagate_states(problem, setup, &props, controls.dt, bundle);
  } else {
    propagate_states(problem, setup, nullptr, controls.dt, bundle);
    bundle.counts.exponentials += 2 * N * setup.num_pairs;
  }
  finalize_value(problem, bundle);
  return bundle;
}

DerivativeBundle gradient(const ControlProblem& problem,
                          const ControlSet& controls) {
  EvalSetup setup = make_setup(problem, controls);
  const int N = setup.num_slices;
  const int K = setup.num_controls;
  const int Q = setup.num_pairs;
  const double p = setup.power;
  DerivativeBundle bundle;
  bundle.gradient = rvec::Zero(K * N);

  if (use_dense_path(problem)) {
    std::vector<SliceBlocks> blocks(N);
    parallel_for(0, N, [&](int n) {
      blocks[n] = slice_blocks(setup.generators[n], setup.ctrl_matrices,
                               controls.dt, problem.commutes, false, {});
    });
    bundle.counts.exponentials += static_cast<long>(N) * (K + 1);
    bundle.counts.slice_kernels += N;
    std::vector<cx_mat> props(N);
    for (int n = 0; n < N; ++n) props[n] = blocks[n].p;
    propagate_states(problem, setup, &props, controls.dt, bundle);
    finalize_value(problem, bundle);
    for (int q = 0; q < Q; ++q) {
      const cxd f = bundle.pair_overlaps[q];
      for (int n = 0; n < N; ++n)
        for (int k = 0; k < K; ++k) {
          // <chi_{n+1}| Dk(P_n) |rho_{n-1}> in 1-based slice labels.
          const cxd gamma = bundle.backward[q][n + 1].dot(
              blocks[n].dk[k] * bundle.forward[q][n]);
          bundle.gradient[n * K + k] +=
              map_first(problem.kind, gamma, f) * p;
        }
    }
  } else {
    propagate_states(problem, setup, nullptr, controls.dt, bundle);
    finalize_value(problem, bundle);
    bundle.counts.exponentials += 2 * N * Q;
    rmat grads = rmat::Zero(K * N, Q);
    parallel_for(0, N, [&](int n) {
      for (int k = 0; k < K; ++k) {
        AugmentedBlocks aug{setup.generators[n], setup.ctrl_matrices[k],
                            std::nullopt, controls.dt};
        for (int q = 0; q < Q; ++q) {
          const auto slots = aux_action(aug, bundle.forward[q][n]);
          const cxd gamma = bundle.backward[q][n + 1].dot(slots[0]);
          grads(n * K + k, q) =
              map_first(problem.kind, gamma, bundle.pair_overlaps[q]) * p;
        }
      }
    });
    bundle.counts.exponentials += static_cast<long>(N) * K * Q;
    for (int q = 0; q < Q; ++q) bundle.gradient += grads.col(q);
  }
  bundle.gradient /= static_cast<double>(Q);
  return bundle;
}

DerivativeBundle hessian(const ControlProblem& problem,
                         const ControlSet& controls) {
  EvalSetup setup = make_setup(problem, controls);
  const int N = setup.num_slices;
  const int K = setup.num_controls;
  const int Q = setup.num_pairs;
  const double p = setup.power;
  const double p2 = p * p;
  const bool dense = use_dense_path(problem);

  DerivativeBundle bundle;
  bundle.gradient = rvec::Zero(K * N);
  bundle.hessian = rmat::Zero(K * N, K * N);
  rmat& hess = *bundle.hessian;

  std::vector<cx_mat> props(N);
  std::vector<std::vector<cx_mat>> dks;  // dense path: [n][k]
  if (dense) {
    dks.resize(N);
    // First pass: propagators only, so trajectories can be formed before
    // the derivative blocks are consumed.
    parallel_for(0, N, [&](int n) {
      props[n] =
          expm(cx_mat((-ci * controls.dt) * setup.generators[n].toDense()));
    });
    bundle.counts.exponentials += N;
    propagate_states(problem, setup, &props, controls.dt, bundle);
  } else {
    propagate_states(problem, setup, nullptr, controls.dt, bundle);
    bundle.counts.exponentials += 2 * N * Q;
  }
  finalize_value(problem, bundle);

  // Raw per-pair first-derivative overlaps (recycled for the gradient and
  // for the J2 cross terms), and the vectors entering the block
  // off-diagonal elements:
  //   u[q][n*K+k] = Dk(P_n) rho_{n-1},  w[q][n*K+k] = Dk(P_n)^dag chi_{n+1}.
  std::vector<std::vector<cxd>> gamma(Q, std::vector<cxd>(N * K));
  std::vector<std::vector<cx_vec>> u(Q, std::vector<cx_vec>(N * K));
  std::vector<std::vector<cx_vec>> w(Q, std::vector<cx_vec>(N * K));
  // Same-slice raw second-derivative overlaps per pair.
  const int npair = pair_count(K);
  std::vector<std::vector<cxd>> dself(Q, std::vector<cxd>(N * K));
  std::vector<std::vector<cxd>> dmix(Q, std::vector<cxd>(N * npair));

  if (dense) {
    parallel_for(0, N, [&](int n) {
      SliceBlocks blocks =
          slice_blocks(setup.generators[n], setup.ctrl_matrices, controls.dt,
                       problem.commutes, true, {});
      for (int q = 0; q < Q; ++q) {
        const cx_vec& rho = bundle.forward[q][n];
        const cx_vec& chi = bundle.backward[q][n + 1];
        for (int k = 0; k < K; ++k) {
          u[q][n * K + k] = blocks.dk[k] * rho;
          w[q][n * K + k] = blocks.dk[k].adjoint() * chi;
          gamma[q][n * K + k] = chi.dot(u[q][n * K + k]);
          dself[q][n * K + k] = chi.dot(blocks.d2_diag[k] * rho);
        }
        for (int x = 0; x < K; ++x)
          for (int y = x + 1; y < K; ++y) {
            const int pi = pair_index(x, y, K);
            dmix[q][n * npair + pi] = chi.dot(blocks.d2_mixed[pi] * rho);
          }
      }
    });
    bundle.counts.exponentials +=
        static_cast<long>(N) * (K + npair);
    bundle.counts.slice_kernels += N;
  } else {
    parallel_for(0, N, [&](int n) {
      const sp_cx_mat& gen = setup.generators[n];
      const sp_cx_mat gen_adj = gen.adjoint();
      for (int q = 0; q < Q; ++q) {
        const cx_vec& rho = bundle.forward[q][n];
        const cx_vec& chi = bundle.backward[q][n + 1];
        for (int k = 0; k < K; ++k) {
          AugmentedBlocks aug3{gen, setup.ctrl_matrices[k],
                               setup.ctrl_matrices[k], controls.dt};
          const auto slots = aux_action(aug3, rho);
          u[q][n * K + k] = slots[1];
          gamma[q][n * K + k] = chi.dot(slots[1]);
          dself[q][n * K + k] = 2.0 * chi.dot(slots[0]);
          const sp_cx_mat hk_adj = setup.ctrl_matrices[k].adjoint();
          AugmentedBlocks aug_adj{gen_adj, hk_adj, std::nullopt, -controls.dt};
          w[q][n * K + k] = aux_action(aug_adj, chi)[0];
        }
        for (int x = 0; x < K; ++x)
          for (int y = x + 1; y < K; ++y) {
            const int pi = pair_index(x, y, K);
            AugmentedBlocks aug_xy{gen, setup.ctrl_matrices[x],
                                   setup.ctrl_matrices[y], controls.dt};
            cxd val = 2.0 * chi.dot(aux_action(aug_xy, rho)[0]);
            if (!problem.commutes(x, y)) {
              AugmentedBlocks aug_yx{gen, setup.ctrl_matrices[y],
                                     setup.ctrl_matrices[x], controls.dt};
              val = 0.5 * val + chi.dot(aux_action(aug_yx, rho)[0]);
            }
            dmix[q][n * npair + pi] = val;
          }
      }
    });
    bundle.counts.exponentials +=
        static_cast<long>(N) * Q * (2 * K + npair);
  }

  // Gradient from the recycled first derivatives.
  for (int q = 0; q < Q; ++q) {
    const cxd f = bundle.pair_overlaps[q];
    for (int i = 0; i < N * K; ++i)
      bundle.gradient[i] += map_first(problem.kind, gamma[q][i], f) * p;
  }
  bundle.gradient /= static_cast<double>(Q);

  // Same-slice Hessian elements.
  for (int q = 0; q < Q; ++q) {
    const cxd f = bundle.pair_overlaps[q];
    for (int n = 0; n < N; ++n) {
      for (int k = 0; k < K; ++k) {
        const int idx = n * K + k;
        hess(idx, idx) += map_second(problem.kind, dself[q][idx],
                                     gamma[q][idx], gamma[q][idx], f) *
                          p2 / Q;
      }
      for (int x = 0; x < K; ++x)
        for (int y = x + 1; y < K; ++y) {
          const int pi = pair_index(x, y, K);
          const double val =
              map_second(problem.kind, dmix[q][n * npair + pi],
                         gamma[q][n * K + x], gamma[q][n * K + y], f) *
              p2 / Q;
          hess(n * K + x, n * K + y) += val;
          hess(n * K + y, n * K + x) += val;
        }
    }
  }

  // Block off-diagonals: for m < n,
  //   <chi_{n+1}| Dk(P_n) P_{n-1} ... P_{m+1} Dj(P_m) |rho_{m-1}>
  // evaluated as <w[n,k], v> with v the chained propagation of u[m,j].
  parallel_for(0, N - 1, [&](int m) {
    std::vector<std::vector<cx_vec>> v(Q);
    for (int q = 0; q < Q; ++q) {
      v[q].resize(K);
      for (int j = 0; j < K; ++j) v[q][j] = u[q][m * K + j];
    }
    for (int n = m + 1; n < N; ++n) {
      for (int q = 0; q < Q; ++q) {
        const cxd f = bundle.pair_overlaps[q];
        for (int k = 0; k < K; ++k)
          for (int j = 0; j < K; ++j) {
            const cxd eps = w[q][n * K + k].dot(v[q][j]);
            const double val =
                map_second(problem.kind, eps, gamma[q][n * K + k],
                           gamma[q][m * K + j], f) *
                p2 / Q;
            hess(n * K + k, m * K + j) += val;
          }
      }
      if (n < N - 1) {
        if (dense) {
          for (int q = 0; q < Q; ++q)
            for (int j = 0; j < K; ++j) v[q][j] = props[n] * v[q][j];
        } else {
          const sp_cx_mat step = (-ci * controls.dt) * setup.generators[n];
          for (int q = 0; q < Q; ++q)
            for (int j = 0; j < K; ++j) v[q][j] = expm_action(step, v[q][j]);
        }
      }
    }
  });
  // Mirror the lower block triangle.
  for (int m = 0; m < N; ++m)
    for (int n = m + 1; n < N; ++n)
      for (int k = 0; k < K; ++k)
        for (int j = 0; j < K; ++j)
          hess(m * K + j, n * K + k) = hess(n * K + k, m * K + j);

  return bundle;
}

DerivativeBundle ensemble_evaluate(const std::vector<EnsembleMember>& members,
                                   const ControlSet& controls,
                                   EvalOrder order) {
  if (members.empty())
    throw std::invalid_argument("ensemble_evaluate: empty ensemble");
  double total = 0.0;
  for (const auto& m : members) {
    if (!(m.weight > 0.0))
      throw std::invalid_argument("ensemble_evaluate: weights must be positive");
    total += m.weight;
  }

  DerivativeBundle acc;
  bool first = true;
  for (const auto& m : members) {
    const double weight = m.weight / total;
    DerivativeBundle b;
    switch (order) {
      case EvalOrder::Value:
        b = fidelity(m.problem, controls);
        break;
      case EvalOrder::Gradient:
        b = gradient(m.problem, controls);
        break;
      case EvalOrder::Hessian:
        b = hessian(m.problem, controls);
        break;
    }
    if (first) {
      acc = std::move(b);
      acc.overlap *= weight;
      acc.value *= weight;
      acc.value_complex *= weight;
      if (acc.gradient.size() > 0) acc.gradient *= weight;
      if (acc.hessian) *acc.hessian *= weight;
      first = false;
    } else {
      acc.overlap += weight * b.overlap;
      acc.value += weight * b.value;
      acc.value_complex += weight * b.value_complex;
      if (acc.gradient.size() > 0 && b.gradient.size() > 0)
        acc.gradient += weight * b.gradient;
      if (acc.hessian && b.hessian) *acc.hessian += weight * *b.hessian;
      acc.counts.exponentials += b.counts.exponentials;
      acc.counts.slice_kernels += b.counts.slice_kernels;
    }
  }
  return acc;
}

}  // namespace pulseopt
