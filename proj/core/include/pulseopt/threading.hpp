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
#ifndef PULSEOPT_THREADING_H_
#define PULSEOPT_THREADING_H_

#include <functional>

namespace pulseopt {

/// Caps worker concurrency for parallel_for. 0 restores the hardware
/// default.
void set_max_threads(int n);
int max_threads();

/// Runs fn(i) for i in [begin, end). Iterations must write to disjoint
/// locations; results are then independent of the thread count, which keeps
/// evaluations bitwise deterministic. Exceptions are rethrown on the caller.
void parallel_for(int begin, int end, const std::function<void(int)>& fn);

}  // namespace pulseopt

#endif  // PULSEOPT_THREADING_H_
