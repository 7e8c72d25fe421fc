// Copyright 2026 The ensemble-oc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "eoc/parallel.hpp"

#include <atomic>

namespace eoc::parallel {

namespace {
std::atomic<int> g_max_threads{0};  // 0 = hardware default
}

int max_threads() {
  int cap = g_max_threads.load(std::memory_order_relaxed);
  if (cap > 0) return cap;
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_max_threads(int n) {
  g_max_threads.store(n > 0 ? n : 0, std::memory_order_relaxed);
}

}  // namespace eoc::parallel
