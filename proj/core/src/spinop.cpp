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
#include "pulseopt/spinop.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>
#include <unsupported/Eigen/KroneckerProduct>

namespace pulseopt {

namespace {

constexpr double kDropTol = 1e-14;

sp_cx_mat sparse_identity(int n) {
  sp_cx_mat id(n, n);
  id.setIdentity();
  return id;
}

sp_cx_mat from_dense(const cx_mat& m) {
  sp_cx_mat s = m.sparseView(1.0, kDropTol);
  s.makeCompressed();
  return s;
}

}  // namespace

double one_norm(const cx_mat& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().colwise().sum().maxCoeff();
}

double one_norm(const sp_cx_mat& m) {
  double best = 0.0;
  for (int j = 0; j < m.outerSize(); ++j) {
    double col = 0.0;
    for (sp_cx_mat::InnerIterator it(m, j); it; ++it) col += std::abs(it.value());
    best = std::max(best, col);
  }
  return best;
}

void drop_small_entries(cx_mat& m, double tol) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (std::abs(m(i, j)) < tol) m(i, j) = cxd(0, 0);
}

sp_cx_mat pruned(const sp_cx_mat& m, double tol) {
  sp_cx_mat out = m;
  out.prune([tol](Eigen::Index, Eigen::Index, const cxd& v) {
    return std::abs(v) >= tol;
  });
  out.makeCompressed();
  return out;
}

int SpinSystem::hilbert_dim() const {
  int d = 1;
  for (int m : multiplicities) d *= m;
  return d;
}

int SpinSystem::liouville_dim() const {
  const int d = hilbert_dim();
  return d * d;
}

void SpinSystem::validate() const {
  const int n = num_spins();
  if (n == 0) throw std::invalid_argument("spin system has no spins");
  for (int m : multiplicities)
    if (m < 2) throw std::invalid_argument("multiplicity must be >= 2");
  if (!offsets.empty() && static_cast<int>(offsets.size()) != n)
    throw std::invalid_argument("offsets length does not match spin count");
  for (const auto& jc : j_couplings) {
    if (jc.spin_i < 1 || jc.spin_i > n || jc.spin_j < 1 || jc.spin_j > n)
      throw std::invalid_argument("coupling spin index out of range");
    if (jc.spin_i == jc.spin_j)
      throw std::invalid_argument("coupling indices must be distinct");
  }
  for (const auto& q : quadrupolar) {
    if (q.spin < 1 || q.spin > n)
      throw std::invalid_argument("quadrupolar spin index out of range");
    if (multiplicities[q.spin - 1] < 3)
      throw std::invalid_argument(
          "quadrupolar coupling requires spin-1 or higher");
    const double scale = std::max(1.0, q.tensor.cwiseAbs().maxCoeff());
    if (((q.tensor - q.tensor.transpose()).cwiseAbs().maxCoeff()) >
        1e-12 * scale)
      throw std::invalid_argument("quadrupolar tensor must be symmetric");
  }
  if (relaxation && (relaxation->r1 < 0.0 || relaxation->r2 < 0.0))
    throw std::invalid_argument("relaxation rates must be nonnegative");
}

SpinOperators spin_operators(int multiplicity) {
  if (multiplicity < 2)
    throw std::invalid_argument("invalid multiplicity, need 2s+1 >= 2");
  const int n = multiplicity;
  const double s = 0.5 * (n - 1);

  cx_mat sz = cx_mat::Zero(n, n);
  cx_mat sp = cx_mat::Zero(n, n);
  cx_mat sm = cx_mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double m = s - i;  // row i holds |s, m>
    sz(i, i) = m;
    if (i > 0) sp(i - 1, i) = std::sqrt(s * (s + 1) - m * (m + 1));
    if (i < n - 1) sm(i + 1, i) = std::sqrt(s * (s + 1) - m * (m - 1));
  }
  cx_mat sx = 0.5 * (sp + sm);
  cx_mat sy = (sp - sm) / (2.0 * ci);
  cx_mat s2 = sx * sx + sy * sy + sz * sz;

  SpinOperators out;
  out.sx.matrix = from_dense(sx);
  out.sy.matrix = from_dense(sy);
  out.sz.matrix = from_dense(sz);
  out.sp.matrix = from_dense(sp);
  out.sm.matrix = from_dense(sm);
  out.s2.matrix = from_dense(s2);
  return out;
}

HilbertOperator composite_operator(
    const SpinSystem& system,
    const std::vector<std::pair<int, sp_cx_mat>>& placements) {
  const int n = system.num_spins();
  std::vector<sp_cx_mat> factors(n);
  std::vector<bool> placed(n, false);
  for (int k = 0; k < n; ++k)
    factors[k] = sparse_identity(system.multiplicities[k]);
  for (const auto& [idx, op] : placements) {
    if (idx < 1 || idx > n)
      throw std::invalid_argument("composite_operator: spin index out of range");
    const int mult = system.multiplicities[idx - 1];
    if (op.rows() != mult || op.cols() != mult)
      throw std::invalid_argument(
          "composite_operator: operator dimension does not match multiplicity");
    if (placed[idx - 1])
      throw std::invalid_argument("composite_operator: duplicate spin index");
    placed[idx - 1] = true;
    factors[idx - 1] = op;
  }
  sp_cx_mat chain = factors[0];
  for (int k = 1; k < n; ++k)
    chain = Eigen::kroneckerProduct(chain, factors[k]).eval();
  return HilbertOperator{pruned(chain, kDropTol)};
}

HilbertOperator drift_hamiltonian(const SpinSystem& system) {
  system.validate();
  const int d = system.hilbert_dim();
  sp_cx_mat h0(d, d);

  for (int k = 0; k < system.num_spins(); ++k) {
    const double off = system.offsets.empty() ? 0.0 : system.offsets[k];
    if (off == 0.0) continue;
    auto ops = spin_operators(system.multiplicities[k]);
    h0 = h0 + cxd(off) * composite_operator(system, {{k + 1, ops.sz.matrix}})
                             .matrix;
  }

  for (const auto& jc : system.j_couplings) {
    auto oi = spin_operators(system.multiplicities[jc.spin_i - 1]);
    auto oj = spin_operators(system.multiplicities[jc.spin_j - 1]);
    sp_cx_mat zz = composite_operator(system, {{jc.spin_i, oi.sz.matrix},
                                               {jc.spin_j, oj.sz.matrix}})
                       .matrix;
    if (jc.weak) {
      h0 = h0 + cxd(jc.strength) * zz;
    } else {
      sp_cx_mat xx = composite_operator(system, {{jc.spin_i, oi.sx.matrix},
                                                 {jc.spin_j, oj.sx.matrix}})
                         .matrix;
      sp_cx_mat yy = composite_operator(system, {{jc.spin_i, oi.sy.matrix},
                                                 {jc.spin_j, oj.sy.matrix}})
                         .matrix;
      h0 = h0 + cxd(jc.strength) * (xx + yy + zz);
    }
  }

  for (const auto& q : system.quadrupolar) {
    auto ops = spin_operators(system.multiplicities[q.spin - 1]);
    const sp_cx_mat local[3] = {ops.sx.matrix, ops.sy.matrix, ops.sz.matrix};
    sp_cx_mat bilinear(system.multiplicities[q.spin - 1],
                       system.multiplicities[q.spin - 1]);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        if (q.tensor(a, b) == 0.0) continue;
        bilinear = bilinear + cxd(q.tensor(a, b)) * (local[a] * local[b]);
      }
    h0 = h0 + composite_operator(system, {{q.spin, pruned(bilinear, kDropTol)}})
                  .matrix;
  }

  return HilbertOperator{pruned(h0, kDropTol)};
}

Superoperator commutation_superoperator(const HilbertOperator& h) {
  const sp_cx_mat& m = h.matrix;
  if (m.rows() != m.cols())
    throw std::invalid_argument("commutation_superoperator: non-square input");
  const int n = static_cast<int>(m.rows());
  sp_cx_mat id = sparse_identity(n);
  sp_cx_mat mt = m.transpose();
  sp_cx_mat left = Eigen::kroneckerProduct(id, m);
  sp_cx_mat right = Eigen::kroneckerProduct(mt, id);
  Superoperator out;
  out.matrix = pruned(left - right, kDropTol);
  cx_mat dense = m.toDense();
  out.is_hermitian =
      (dense - dense.adjoint()).cwiseAbs().maxCoeff() <
      1e-12 * std::max(1.0, dense.cwiseAbs().maxCoeff());
  return out;
}

Superoperator relaxation_superoperator(const SpinSystem& system) {
  system.validate();
  const int d = system.hilbert_dim();
  Superoperator out;
  out.matrix = sp_cx_mat(d * d, d * d);
  out.is_hermitian = true;
  out.includes_relaxation = true;
  if (!system.relaxation) return out;
  const double r1 = system.relaxation->r1;
  const double r2 = system.relaxation->r2;
  std::vector<Eigen::Triplet<cxd>> trip;
  trip.reserve(d * d);
  for (int col = 0; col < d; ++col)
    for (int row = 0; row < d; ++row) {
      const int p = col * d + row;  // column-wise vec index
      const double rate = (row == col) ? r1 : r2;
      if (rate != 0.0) trip.emplace_back(p, p, cxd(rate));
    }
  out.matrix.setFromTriplets(trip.begin(), trip.end());
  return out;
}

Superoperator drift_liouvillian(const SpinSystem& system) {
  Superoperator comm = commutation_superoperator(drift_hamiltonian(system));
  Superoperator relax = relaxation_superoperator(system);
  Superoperator out;
  out.includes_relaxation = relax.matrix.nonZeros() > 0;
  out.is_hermitian = comm.is_hermitian && !out.includes_relaxation;
  out.matrix = comm.matrix - ci * relax.matrix;
  out.matrix.makeCompressed();
  return out;
}

cx_vec vectorize(const cx_mat& op) {
  return Eigen::Map<const cx_vec>(op.data(), op.size());
}

namespace {

struct OpToken {
  double sign = 1.0;
  std::string name;
  std::vector<int> indices;
};

std::vector<OpToken> tokenize_expression(const std::string& spec) {
  std::vector<OpToken> tokens;
  size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < spec.size() && std::isspace(static_cast<unsigned char>(spec[pos]))) ++pos;
  };
  skip_ws();
  if (pos == spec.size())
    throw std::invalid_argument("empty state/operator spec");
  while (pos < spec.size()) {
    OpToken tok;
    skip_ws();
    if (pos < spec.size() && (spec[pos] == '+' || spec[pos] == '-')) {
      tok.sign = (spec[pos] == '-') ? -1.0 : 1.0;
      ++pos;
      skip_ws();
    }
    size_t start = pos;
    while (pos < spec.size() &&
           (std::isalnum(static_cast<unsigned char>(spec[pos]))))
      ++pos;
    tok.name = spec.substr(start, pos - start);
    if (tok.name.empty())
      throw std::invalid_argument("malformed spec near '" + spec.substr(start) +
                                  "'");
    skip_ws();
    if (pos >= spec.size() || spec[pos] != '(')
      throw std::invalid_argument("expected '(' after operator name '" +
                                  tok.name + "'");
    ++pos;
    while (true) {
      skip_ws();
      size_t num_start = pos;
      while (pos < spec.size() && std::isdigit(static_cast<unsigned char>(spec[pos]))) ++pos;
      if (num_start == pos)
        throw std::invalid_argument("expected spin index in '" + spec + "'");
      tok.indices.push_back(std::stoi(spec.substr(num_start, pos - num_start)));
      skip_ws();
      if (pos < spec.size() && spec[pos] == ',') {
        ++pos;
        continue;
      }
      if (pos < spec.size() && spec[pos] == ')') {
        ++pos;
        break;
      }
      throw std::invalid_argument("expected ',' or ')' in '" + spec + "'");
    }
    tokens.push_back(std::move(tok));
    skip_ws();
  }
  return tokens;
}

// Total-spin operators over the token's index list.
struct TotalOps {
  sp_cx_mat lp, lm, lz;
};

TotalOps total_operators(const SpinSystem& system,
                         const std::vector<int>& indices) {
  const int d = system.hilbert_dim();
  TotalOps t{sp_cx_mat(d, d), sp_cx_mat(d, d), sp_cx_mat(d, d)};
  for (int idx : indices) {
    if (idx < 1 || idx > system.num_spins())
      throw std::invalid_argument("spin index out of range in spec");
    auto ops = spin_operators(system.multiplicities[idx - 1]);
    t.lp = t.lp + composite_operator(system, {{idx, ops.sp.matrix}}).matrix;
    t.lm = t.lm + composite_operator(system, {{idx, ops.sm.matrix}}).matrix;
    t.lz = t.lz + composite_operator(system, {{idx, ops.sz.matrix}}).matrix;
  }
  return t;
}

sp_cx_mat token_operator(const SpinSystem& system, const OpToken& tok) {
  const auto& name = tok.name;
  auto need_indices = [&](size_t lo, size_t hi) {
    if (tok.indices.size() < lo || tok.indices.size() > hi)
      throw std::invalid_argument("operator '" + name +
                                  "' given wrong number of spin indices");
  };
  if (name == "Lx" || name == "Ly" || name == "Lz" || name == "Lp" ||
      name == "Lm") {
    need_indices(1, 1);
    const int idx = tok.indices[0];
    if (idx < 1 || idx > system.num_spins())
      throw std::invalid_argument("spin index out of range in spec");
    auto ops = spin_operators(system.multiplicities[idx - 1]);
    const sp_cx_mat& local = name == "Lx"   ? ops.sx.matrix
                             : name == "Ly" ? ops.sy.matrix
                             : name == "Lz" ? ops.sz.matrix
                             : name == "Lp" ? ops.sp.matrix
                                            : ops.sm.matrix;
    return composite_operator(system, {{idx, local}}).matrix;
  }
  if (name == "T10" || name == "T1p1" || name == "T1m1") {
    need_indices(1, 1);
    TotalOps t = total_operators(system, tok.indices);
    if (name == "T10") return t.lz;
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    if (name == "T1p1") return sp_cx_mat((-inv_sqrt2) * t.lp);
    return sp_cx_mat(inv_sqrt2 * t.lm);
  }
  if (name == "T20" || name == "T2p1" || name == "T2m1" || name == "T2p2" ||
      name == "T2m2") {
    need_indices(1, 2);
    TotalOps t = total_operators(system, tok.indices);
    if (name == "T2p2") return sp_cx_mat(0.5 * (t.lp * t.lp));
    if (name == "T2m2") return sp_cx_mat(0.5 * (t.lm * t.lm));
    if (name == "T2p1")
      return sp_cx_mat(-0.5 * (t.lz * t.lp + t.lp * t.lz));
    if (name == "T2m1") return sp_cx_mat(0.5 * (t.lz * t.lm + t.lm * t.lz));
    // T20 = sqrt(2/3) (Lz^2 - (L+L- + L-L+)/4)
    sp_cx_mat core = t.lz * t.lz;
    core = core - 0.25 * (t.lp * t.lm + t.lm * t.lp);
    return sp_cx_mat(std::sqrt(2.0 / 3.0) * core);
  }
  if (name == "singlet") {
    need_indices(2, 2);
    const int i = tok.indices[0], j = tok.indices[1];
    if (i == j) throw std::invalid_argument("singlet needs two distinct spins");
    auto oi = spin_operators(system.multiplicities[i - 1]);
    auto oj = spin_operators(system.multiplicities[j - 1]);
    // Singlet projector for a spin-1/2 pair: 1/4 - L(i).L(j).
    sp_cx_mat dot =
        composite_operator(system, {{i, oi.sx.matrix}, {j, oj.sx.matrix}})
            .matrix +
        composite_operator(system, {{i, oi.sy.matrix}, {j, oj.sy.matrix}})
            .matrix +
        composite_operator(system, {{i, oi.sz.matrix}, {j, oj.sz.matrix}})
            .matrix;
    sp_cx_mat quarter = sparse_identity(system.hilbert_dim());
    return sp_cx_mat(cxd(0.25) * quarter - dot);
  }
  throw std::invalid_argument("unknown operator '" + name + "' in spec");
}

}  // namespace

HilbertOperator operator_expression(const SpinSystem& system,
                                    const std::string& spec) {
  system.validate();
  const int d = system.hilbert_dim();
  sp_cx_mat total(d, d);
  for (const auto& tok : tokenize_expression(spec))
    total = total + cxd(tok.sign) * token_operator(system, tok);
  return HilbertOperator{pruned(total, kDropTol)};
}

cx_vec state_builder(const SpinSystem& system, const std::string& spec) {
  HilbertOperator op = operator_expression(system, spec);
  cx_vec v = vectorize(op.matrix.toDense());
  const double norm = v.norm();
  if (norm < 1e-300)
    throw std::invalid_argument("state spec '" + spec +
                                "' produced an identically zero state");
  return v / norm;
}

}  // namespace pulseopt
