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

#ifndef EOC_PARALLEL_HPP_
#define EOC_PARALLEL_HPP_

#include <cstddef>
#include <exception>
#include <utility>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace eoc {

// Execution policy for the data-parallel kernels. Every kernel that accepts
// an Exec produces bit-identical output in both modes: work items write to
// disjoint slots and reductions happen in a fixed (block) order, so Exec::seq
// doubles as the reference implementation the parallel path is tested
// against.
enum class Exec { seq, par };

namespace parallel {

int max_threads();
void set_max_threads(int n);  // n <= 0 restores the hardware default

// fn(i) for i in [0, n). In par mode the loop body must only touch slot i;
// dynamic scheduling balances uneven work (early time slices integrate much
// longer characteristics) without affecting the output. The lowest-index
// exception wins, so failures are reported deterministically.
template <typename F>
void for_each_index(Exec exec, std::ptrdiff_t n, F&& fn) {
#if defined(_OPENMP)
  if (exec == Exec::par && max_threads() > 1 && n > 1) {
    std::exception_ptr err;
    std::ptrdiff_t err_index = n;
#pragma omp parallel for schedule(dynamic) num_threads(max_threads())
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
#pragma omp critical(eoc_parallel_err)
        {
          if (i < err_index) {
            err_index = i;
            err = std::current_exception();
          }
        }
      }
    }
    if (err) std::rethrow_exception(err);
    return;
  }
#endif
  for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
}

}  // namespace parallel
}  // namespace eoc

#endif  // EOC_PARALLEL_HPP_
