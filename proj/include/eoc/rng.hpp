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

#ifndef EOC_RNG_HPP_
#define EOC_RNG_HPP_

#include <cstdint>
#include <random>

namespace eoc {

// splitmix64 of (seed ^ stream * odd-constant). Used to derive independent
// per-block substreams so parallel Monte Carlo is reproducible regardless of
// scheduling: block b always consumes the stream mix_seed(seed, b).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Inverse standard normal CDF, accurate to ~1e-15 (rational initial guess
// plus one Halley refinement against erfc).
double normal_icdf(double p);

// mt19937_64 with explicit output mapping; fully specified by the C++
// standard, so sequences are identical across implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform on the open interval (0, 1).
  double uniform01() {
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  double normal() { return normal_icdf(uniform01()); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace eoc

#endif  // EOC_RNG_HPP_
