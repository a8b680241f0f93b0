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
#ifndef PULSEOPT_CONTROL_H_
#define PULSEOPT_CONTROL_H_

#include "pulseopt/types.hpp"

namespace pulseopt {

/// Piecewise-constant control amplitudes: K channels by N time slices of
/// normalised (dimensionless) values. Physical amplitude in rad/s is
/// power * amplitude. The flattened column vector is slice-major,
/// control-minor: element (k, n) sits at index (n-1)*K + (k-1), which is
/// the column-major layout of the K x N array.
struct ControlSet {
  rmat amplitudes;  // K x N
  double dt = 0.0;     // seconds per slice
  double power = 0.0;  // nominal power, rad/s

  int num_controls() const { return static_cast<int>(amplitudes.rows()); }
  int num_slices() const { return static_cast<int>(amplitudes.cols()); }
  double duration() const { return dt * num_slices(); }

  rvec flatten() const {
    return Eigen::Map<const rvec>(amplitudes.data(), amplitudes.size());
  }
  void set_from_flat(const rvec& flat) {
    if (flat.size() != amplitudes.size())
      throw std::invalid_argument("ControlSet: flat vector length mismatch");
    amplitudes = Eigen::Map<const rmat>(flat.data(), amplitudes.rows(),
                                        amplitudes.cols());
  }

  void validate() const {
    if (num_controls() < 1 || num_slices() < 1)
      throw std::invalid_argument("ControlSet: need K >= 1 and N >= 1");
    if (!(dt > 0.0)) throw std::invalid_argument("ControlSet: dt must be > 0");
    if (!(power > 0.0))
      throw std::invalid_argument("ControlSet: power must be > 0");
  }
};

}  // namespace pulseopt

#endif  // PULSEOPT_CONTROL_H_
