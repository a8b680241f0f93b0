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
#ifndef PULSEOPT_SPINOP_H_
#define PULSEOPT_SPINOP_H_

#include <string>
#include <utility>
#include <vector>

#include "pulseopt/spin_system.hpp"
#include "pulseopt/types.hpp"

namespace pulseopt {

/// Hilbert-space operator. Spin operators in the product basis are sparse;
/// entries below 1e-14 are dropped at construction.
struct HilbertOperator {
  sp_cx_mat matrix;
  int dim() const { return static_cast<int>(matrix.rows()); }
};

/// Liouville-space operator acting on column-wise vectorised density
/// matrices.
struct Superoperator {
  sp_cx_mat matrix;
  bool is_hermitian = false;
  bool includes_relaxation = false;
  int dim() const { return static_cast<int>(matrix.rows()); }
};

/// Single-spin operator set for one multiplicity.
struct SpinOperators {
  HilbertOperator sx, sy, sz, sp, sm, s2;
};

/// Cartesian and ladder operators for a (2s+1)-dimensional spin.
/// Sz = diag(s, s-1, ..., -s); S+/- from the ladder rules;
/// Sx = (S+ + S-)/2, Sy = (S+ - S-)/(2i); S^2 = Sx^2 + Sy^2 + Sz^2.
SpinOperators spin_operators(int multiplicity);

/// Kronecker chain with identities at unlisted positions. The operator for
/// spin k sits at the k-th position of the chain; placements on distinct
/// spins multiply within the chain (e.g. Lz(1)Lz(2)).
/// `placements` holds (1-based spin index, single-spin operator) pairs.
HilbertOperator composite_operator(
    const SpinSystem& system,
    const std::vector<std::pair<int, sp_cx_mat>>& placements);

/// H0 = sum_k offset_k Lz(k) + sum couplings a(Lx Lx + Ly Ly + Lz Lz)
/// (LzLz only when flagged weak) + sum quadrupolar L.V.L terms.
HilbertOperator drift_hamiltonian(const SpinSystem& system);

/// Commutation superoperator under column-wise vectorisation:
/// L vec(X) = vec(HX - XH), i.e. L = 1 (x) H - H^T (x) 1. Hermitian for
/// Hermitian H.
Superoperator commutation_superoperator(const HilbertOperator& h);

/// Diagonal T1/T2 relaxation superoperator: rate r1 on population-like
/// vectorised basis elements (diagonal density matrix positions), r2 on
/// coherences. Entries are decay rates in 1/s; drift_liouvillian subtracts
/// i*R so that propagation decays.
Superoperator relaxation_superoperator(const SpinSystem& system);

/// Full drift generator in Liouville space: commutation superoperator of
/// the drift Hamiltonian minus i times the relaxation superoperator.
Superoperator drift_liouvillian(const SpinSystem& system);

/// Hilbert-space operator from a spec string, e.g. "Lz(1)+Lz(2)",
/// "-Lx(1)", "T2p2(1)", "T20(1,2)", "singlet(1,2)".
/// Grammar: term {('+'|'-') term}, term = name '(' idx {',' idx} ')'.
/// Names: Lx Ly Lz Lp Lm T10 T1p1 T1m1 T20 T2p1 T2m1 T2p2 T2m2 singlet.
HilbertOperator operator_expression(const SpinSystem& system,
                                    const std::string& spec);

/// Vectorised, Euclidean-normalised state built from an operator spec.
cx_vec state_builder(const SpinSystem& system, const std::string& spec);

/// Column-wise vectorisation of a dense operator.
cx_vec vectorize(const cx_mat& op);

}  // namespace pulseopt

#endif  // PULSEOPT_SPINOP_H_
