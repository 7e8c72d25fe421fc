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

#ifndef EOC_ERRORS_HPP_
#define EOC_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace eoc {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised by the expression parser; `position` is a 0-based byte offset
// into the source text.
struct ParseError : Error {
  ParseError(const std::string& what, std::size_t pos)
      : Error(what + " (at position " + std::to_string(pos) + ")"),
        position(pos) {}
  std::size_t position;
};

// Non-finite result while evaluating a field expression.
struct EvalError : Error {
  using Error::Error;
};

// Bad problem config, bad CLI input, violated construction invariant.
struct ConfigError : Error {
  using Error::Error;
};

// Trajectory left the inflated safety box.
struct EscapeError : Error {
  EscapeError(const std::string& what, double t)
      : Error(what + " (exit time " + std::to_string(t) + ")"),
        exit_time(t) {}
  double exit_time;
};

// Time value not aligned to the problem mesh where alignment is required.
struct MeshError : Error {
  using Error::Error;
};

// Rejection sampler degenerated (acceptance rate below threshold).
struct SamplingError : Error {
  using Error::Error;
};

}  // namespace eoc

#endif  // EOC_ERRORS_HPP_
