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
#include "pulseopt/quasi_newton.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace pulseopt {

namespace {
constexpr double kSkipTol = 1e-8;
}

QuasiNewtonUpdate sr1_update(const rmat& b, const rvec& dx, const rvec& dg) {
  const rvec y = dg - b * dx;
  const double denom = y.dot(dx);
  if (std::abs(denom) < kSkipTol * dx.norm() * y.norm())
    return QuasiNewtonUpdate{b, true};
  return QuasiNewtonUpdate{b + (y * y.transpose()) / denom, false};
}

QuasiNewtonUpdate broyden_update(const rmat& b, const rvec& dx, const rvec& dg,
                                 double phi) {
  if (phi < 0.0 || phi > 1.0)
    throw std::invalid_argument("broyden phi must be in [0, 1]");
  const double curvature = dx.dot(dg);
  if (curvature <= kSkipTol * dx.norm() * dg.norm())
    return QuasiNewtonUpdate{b, true};

  rmat out = rmat::Zero(b.rows(), b.cols());
  if (phi < 1.0) {
    // DFP form.
    const rvec bdx = b * dx;
    const double xbx = dx.dot(bdx);
    rmat dfp = b;
    dfp += (1.0 + xbx / curvature) * (dg * dg.transpose()) / curvature;
    dfp -= (dg * bdx.transpose() + bdx * dg.transpose()) / curvature;
    out += (1.0 - phi) * dfp;
  }
  if (phi > 0.0) {
    // BFGS form.
    const rvec bdx = b * dx;
    const double xbx = dx.dot(bdx);
    rmat bfgs = b;
    bfgs -= (bdx * bdx.transpose()) / xbx;
    bfgs += (dg * dg.transpose()) / curvature;
    out += phi * bfgs;
  }
  return QuasiNewtonUpdate{std::move(out), false};
}

QuasiNewtonUpdate inverse_broyden_update(const rmat& binv, const rvec& dx,
                                         const rvec& dg, double phi) {
  if (phi < 0.0 || phi > 1.0)
    throw std::invalid_argument("broyden phi must be in [0, 1]");
  const double curvature = dx.dot(dg);
  if (curvature <= kSkipTol * dx.norm() * dg.norm())
    return QuasiNewtonUpdate{binv, true};

  rmat out = rmat::Zero(binv.rows(), binv.cols());
  if (phi < 1.0) {
    // Inverse DFP.
    const rvec hdg = binv * dg;
    const double ghg = dg.dot(hdg);
    rmat dfp = binv;
    dfp -= (hdg * hdg.transpose()) / ghg;
    dfp += (dx * dx.transpose()) / curvature;
    out += (1.0 - phi) * dfp;
  }
  if (phi > 0.0) {
    // Inverse BFGS.
    const rvec hdg = binv * dg;
    const double ghg = dg.dot(hdg);
    rmat bfgs = binv;
    bfgs += (1.0 + ghg / curvature) * (dx * dx.transpose()) / curvature;
    bfgs -= (dx * hdg.transpose() + hdg * dx.transpose()) / curvature;
    out += phi * bfgs;
  }
  return QuasiNewtonUpdate{std::move(out), false};
}

rvec lbfgs_direction(const LbfgsHistory& history, const rvec& g, int m) {
  if (m < 1) throw std::invalid_argument("lbfgs memory must be >= 1");
  const int available = static_cast<int>(history.size());
  const int used = std::min(available, m);
  if (used == 0) return g;

  // Work over the most recent `used` pairs, newest last in the deque.
  std::vector<double> rho(used), alpha(used);
  rvec q = g;
  for (int i = used - 1; i >= 0; --i) {
    const auto& [dx, dy] = history[available - used + i];
    rho[i] = 1.0 / dy.dot(dx);
    alpha[i] = rho[i] * dx.dot(q);
    q -= alpha[i] * dy;
  }
  const auto& [dx_last, dy_last] = history.back();
  const double scale = dx_last.dot(dy_last) / dy_last.dot(dy_last);
  rvec r = scale * q;
  for (int i = 0; i < used; ++i) {
    const auto& [dx, dy] = history[available - used + i];
    const double beta = rho[i] * dy.dot(r);
    r += dx * (alpha[i] - beta);
  }
  return r;
}

}  // namespace pulseopt
