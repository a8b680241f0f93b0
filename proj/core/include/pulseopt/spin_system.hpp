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
#ifndef PULSEOPT_SPIN_SYSTEM_H_
#define PULSEOPT_SPIN_SYSTEM_H_

#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace pulseopt {

/// Scalar J-coupling between two spins. `weak` truncates the isotropic
/// a(L.L) form to the LzLz term only (secular approximation supplied by
/// the caller).
struct JCoupling {
  int spin_i = 0;  // 1-based
  int spin_j = 0;  // 1-based
  double strength = 0.0;  // rad/s
  bool weak = false;
};

/// Quadrupolar interaction L.V.L on one spin; V is a real symmetric
/// 3x3 tensor in rad/s.
struct Quadrupolar {
  int spin = 0;  // 1-based
  Eigen::Matrix3d tensor = Eigen::Matrix3d::Zero();
};

/// Diagonal T1/T2 relaxation rates in 1/s. Population-like basis states
/// decay at r1, coherence-like at r2.
struct RelaxationRates {
  double r1 = 0.0;
  double r2 = 0.0;
};

/// Declarative spin inventory from which all matrices are generated.
struct SpinSystem {
  std::vector<int> multiplicities;          // 2s+1 per spin, each >= 2
  std::vector<double> offsets;              // Zeeman offsets, rad/s
  std::vector<JCoupling> j_couplings;       // scalar couplings, rad/s
  std::vector<Quadrupolar> quadrupolar;     // spins with multiplicity >= 3
  std::optional<RelaxationRates> relaxation;

  int num_spins() const { return static_cast<int>(multiplicities.size()); }
  int hilbert_dim() const;
  int liouville_dim() const;

  /// Throws std::invalid_argument on broken invariants: multiplicity < 2,
  /// coupling indices out of range or equal, quadrupolar terms on spin-1/2,
  /// asymmetric tensors, negative relaxation rates.
  void validate() const;
};

}  // namespace pulseopt

#endif  // PULSEOPT_SPIN_SYSTEM_H_
