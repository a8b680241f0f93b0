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
#include "pulseopt/matexp.hpp"

#include <cmath>
#include <stdexcept>

namespace pulseopt {

namespace {

constexpr int kMaxTaylorTerms = 200;
// Per-substep norm target for exponential-times-vector actions. Larger
// substeps trade a longer series for fewer sequential steps.
constexpr double kActionStepNorm = 4.0;

int scaling_exponent(double norm, const ExpOptions& opts) {
  int m = 0;
  while (norm > 1.0) {
    norm *= 0.5;
    ++m;
    if (m > opts.max_squarings)
      throw std::runtime_error("expm: norm too large, squaring cap exceeded");
  }
  return m;
}

void check_finite(const sp_cx_mat& a, const char* who) {
  for (int j = 0; j < a.outerSize(); ++j)
    for (sp_cx_mat::InnerIterator it(a, j); it; ++it)
      if (!std::isfinite(it.value().real()) || !std::isfinite(it.value().imag()))
        throw std::invalid_argument(std::string(who) + ": non-finite entries");
}

}  // namespace

void ExpOptions::validate() const {
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be > 0");
  if (drop_threshold < 0.0)
    throw std::invalid_argument("drop threshold must be >= 0");
  if (max_squarings < 0)
    throw std::invalid_argument("max squarings must be >= 0");
}

cx_mat expm(const cx_mat& a, const ExpOptions& opts) {
  opts.validate();
  if (a.rows() != a.cols()) throw std::invalid_argument("expm: non-square input");
  if (!a.allFinite()) throw std::invalid_argument("expm: non-finite entries");
  const int n = static_cast<int>(a.rows());

  const int m = scaling_exponent(one_norm(a), opts);
  const double scale = std::ldexp(1.0, -m);
  cx_mat b = a * scale;

  cx_mat sum = cx_mat::Identity(n, n);
  cx_mat term = cx_mat::Identity(n, n);
  cx_mat next(n, n);
  int k = 0;
  while (true) {
    ++k;
    if (k > kMaxTaylorTerms)
      throw std::runtime_error("expm: Taylor series failed to converge");
    next.noalias() = b * term;
    term = next / static_cast<double>(k);
    drop_small_entries(term, opts.drop_threshold);
    sum += term;
    if (one_norm(term) <= opts.tolerance * one_norm(sum)) break;
  }

  for (int i = 0; i < m; ++i) {
    next.noalias() = sum * sum;
    sum.swap(next);
    drop_small_entries(sum, opts.drop_threshold);
  }
  return sum;
}

cx_vec expm_action(const sp_cx_mat& a, const cx_vec& v, const ExpOptions& opts) {
  opts.validate();
  if (a.rows() != a.cols())
    throw std::invalid_argument("expm_action: non-square matrix");
  if (a.cols() != v.size())
    throw std::invalid_argument("expm_action: dimension mismatch");
  check_finite(a, "expm_action");

  const double norm = one_norm(a);
  const int steps = std::max(1, static_cast<int>(std::ceil(norm / kActionStepNorm)));
  const double inv_steps = 1.0 / steps;

  cx_vec w = v;
  cx_vec term(v.size()), next(v.size());
  for (int s = 0; s < steps; ++s) {
    term = w;
    int k = 0;
    while (true) {
      ++k;
      if (k > kMaxTaylorTerms)
        throw std::runtime_error("expm_action: Taylor series failed to converge");
      next.noalias() = a * term;
      term = next * (inv_steps / k);
      w += term;
      if (term.lpNorm<Eigen::Infinity>() <=
          opts.tolerance * w.lpNorm<Eigen::Infinity>())
        break;
    }
  }
  return w;
}

PropDerivative prop_derivative(const sp_cx_mat& h, const sp_cx_mat& hk,
                               double dt, const ExpOptions& opts) {
  opts.validate();
  if (h.rows() != h.cols() || hk.rows() != hk.cols() || h.rows() != hk.rows())
    throw std::invalid_argument("prop_derivative: dimension mismatch");
  check_finite(h, "prop_derivative");
  check_finite(hk, "prop_derivative");
  const int n = static_cast<int>(h.rows());

  const sp_cx_mat a0 = (-ci * dt) * h;
  const sp_cx_mat b0 = (-ci * dt) * hk;
  // Exact 1-norm of [[A, B], [0, A]].
  const double norm =
      std::max(one_norm(a0), one_norm(a0) + one_norm(b0));
  const int m = scaling_exponent(norm, opts);
  const double scale = std::ldexp(1.0, -m);
  const sp_cx_mat a = a0 * scale;
  const sp_cx_mat b = b0 * scale;

  cx_mat sum_p = cx_mat::Identity(n, n);
  cx_mat sum_d = cx_mat::Zero(n, n);
  cx_mat tp = cx_mat::Identity(n, n);
  cx_mat td = cx_mat::Zero(n, n);
  cx_mat tmp(n, n);
  int k = 0;
  while (true) {
    ++k;
    if (k > kMaxTaylorTerms)
      throw std::runtime_error("prop_derivative: series failed to converge");
    tmp.noalias() = a * td;
    tmp.noalias() += b * tp;
    td = tmp / static_cast<double>(k);
    tmp.noalias() = a * tp;
    tp = tmp / static_cast<double>(k);
    drop_small_entries(tp, opts.drop_threshold);
    drop_small_entries(td, opts.drop_threshold);
    sum_p += tp;
    sum_d += td;
    const double acc = std::max(one_norm(sum_p), one_norm(sum_d));
    if (std::max(one_norm(tp), one_norm(td)) <= opts.tolerance * acc) break;
  }

  cx_mat sq(n, n);
  for (int i = 0; i < m; ++i) {
    sq.noalias() = sum_p * sum_d;
    sq.noalias() += sum_d * sum_p;
    sum_d.swap(sq);
    sq.noalias() = sum_p * sum_p;
    sum_p.swap(sq);
    drop_small_entries(sum_p, opts.drop_threshold);
    drop_small_entries(sum_d, opts.drop_threshold);
  }
  return PropDerivative{std::move(sum_p), std::move(sum_d)};
}

PropSecondDerivative prop_second_derivative(const sp_cx_mat& h,
                                            const sp_cx_mat& hk,
                                            const sp_cx_mat& hj, double dt,
                                            const ExpOptions& opts) {
  opts.validate();
  if (h.rows() != h.cols() || hk.rows() != h.rows() || hj.rows() != h.rows() ||
      hk.rows() != hk.cols() || hj.rows() != hj.cols())
    throw std::invalid_argument("prop_second_derivative: dimension mismatch");
  check_finite(h, "prop_second_derivative");
  check_finite(hk, "prop_second_derivative");
  check_finite(hj, "prop_second_derivative");
  const int n = static_cast<int>(h.rows());

  const sp_cx_mat a0 = (-ci * dt) * h;
  const sp_cx_mat bk0 = (-ci * dt) * hk;
  const sp_cx_mat bj0 = (-ci * dt) * hj;
  const double na = one_norm(a0);
  const double norm = std::max({na, na + one_norm(bk0), na + one_norm(bj0)});
  const int m = scaling_exponent(norm, opts);
  const double scale = std::ldexp(1.0, -m);
  const sp_cx_mat a = a0 * scale;
  const sp_cx_mat bk = bk0 * scale;
  const sp_cx_mat bj = bj0 * scale;

  // Block Taylor over (P, Dk, Dj, D2half) for the bidiagonal generator.
  cx_mat sp_ = cx_mat::Identity(n, n);
  cx_mat sk = cx_mat::Zero(n, n), sj = cx_mat::Zero(n, n),
         s2 = cx_mat::Zero(n, n);
  cx_mat tp = cx_mat::Identity(n, n);
  cx_mat tk = cx_mat::Zero(n, n), tj = cx_mat::Zero(n, n),
         t2 = cx_mat::Zero(n, n);
  cx_mat tmp(n, n);
  int k = 0;
  while (true) {
    ++k;
    if (k > kMaxTaylorTerms)
      throw std::runtime_error(
          "prop_second_derivative: series failed to converge");
    const double inv_k = 1.0 / k;
    tmp.noalias() = a * t2;
    tmp.noalias() += bk * tj;
    t2 = tmp * inv_k;
    tmp.noalias() = a * tj;
    tmp.noalias() += bj * tp;
    tj = tmp * inv_k;
    tmp.noalias() = a * tk;
    tmp.noalias() += bk * tp;
    tk = tmp * inv_k;
    tmp.noalias() = a * tp;
    tp = tmp * inv_k;
    drop_small_entries(tp, opts.drop_threshold);
    drop_small_entries(tk, opts.drop_threshold);
    drop_small_entries(tj, opts.drop_threshold);
    drop_small_entries(t2, opts.drop_threshold);
    sp_ += tp;
    sk += tk;
    sj += tj;
    s2 += t2;
    const double acc = std::max({one_norm(sp_), one_norm(sk), one_norm(sj),
                                 one_norm(s2), 1.0});
    const double trm = std::max({one_norm(tp), one_norm(tk), one_norm(tj),
                                 one_norm(t2)});
    if (trm <= opts.tolerance * acc) break;
  }

  cx_mat n2(n, n), nk(n, n), nj(n, n), np(n, n);
  for (int i = 0; i < m; ++i) {
    n2.noalias() = sp_ * s2;
    n2.noalias() += sk * sj;
    n2.noalias() += s2 * sp_;
    nk.noalias() = sp_ * sk;
    nk.noalias() += sk * sp_;
    nj.noalias() = sp_ * sj;
    nj.noalias() += sj * sp_;
    np.noalias() = sp_ * sp_;
    s2.swap(n2);
    sk.swap(nk);
    sj.swap(nj);
    sp_.swap(np);
    drop_small_entries(sp_, opts.drop_threshold);
    drop_small_entries(sk, opts.drop_threshold);
    drop_small_entries(sj, opts.drop_threshold);
    drop_small_entries(s2, opts.drop_threshold);
  }

  PropSecondDerivative out;
  out.propagator = std::move(sp_);
  out.dk = std::move(sk);
  out.dj = std::move(sj);
  out.d2 = 2.0 * s2;
  return out;
}

std::vector<cx_vec> aux_action(const AugmentedBlocks& blocks, const cx_vec& v,
                               const ExpOptions& opts) {
  opts.validate();
  const sp_cx_mat& a0 = blocks.generator;
  if (a0.rows() != a0.cols())
    throw std::invalid_argument("aux_action: non-square generator");
  const int n = static_cast<int>(a0.rows());
  if (blocks.b1.rows() != n || blocks.b1.cols() != n)
    throw std::invalid_argument("aux_action: b1 dimension mismatch");
  if (blocks.b2 && (blocks.b2->rows() != n || blocks.b2->cols() != n))
    throw std::invalid_argument("aux_action: b2 dimension mismatch");
  if (v.size() != n)
    throw std::invalid_argument("aux_action: vector dimension mismatch");

  const int nb = blocks.block_count();
  const cxd factor = -ci * blocks.dt;
  const double na = one_norm(a0) * std::abs(blocks.dt);
  double nbmax = one_norm(blocks.b1);
  if (blocks.b2) nbmax = std::max(nbmax, one_norm(*blocks.b2));
  const double norm = na + nbmax * std::abs(blocks.dt);
  const int steps =
      std::max(1, static_cast<int>(std::ceil(norm / kActionStepNorm)));
  const double inv_steps = 1.0 / steps;

  // Slots ordered top..bottom; v starts in the bottom slot.
  std::vector<cx_vec> w(nb, cx_vec::Zero(n));
  w[nb - 1] = v;
  std::vector<cx_vec> term(nb), next(nb, cx_vec::Zero(n));
  for (int s = 0; s < steps; ++s) {
    term = w;
    int k = 0;
    while (true) {
      ++k;
      if (k > kMaxTaylorTerms)
        throw std::runtime_error("aux_action: Taylor series failed to converge");
      const cxd coeff = factor * (inv_steps / k);
      if (nb == 2) {
        next[0].noalias() = a0 * term[0];
        next[0].noalias() += blocks.b1 * term[1];
        next[1].noalias() = a0 * term[1];
      } else {
        next[0].noalias() = a0 * term[0];
        next[0].noalias() += blocks.b1 * term[1];
        next[1].noalias() = a0 * term[1];
        next[1].noalias() += (*blocks.b2) * term[2];
        next[2].noalias() = a0 * term[2];
      }
      double tnorm = 0.0, wnorm = 0.0;
      for (int b = 0; b < nb; ++b) {
        term[b] = next[b] * coeff;
        w[b] += term[b];
        tnorm = std::max(tnorm, term[b].lpNorm<Eigen::Infinity>());
        wnorm = std::max(wnorm, w[b].lpNorm<Eigen::Infinity>());
      }
      if (tnorm <= opts.tolerance * std::max(wnorm, 1e-300)) break;
    }
  }
  return w;
}

}  // namespace pulseopt
