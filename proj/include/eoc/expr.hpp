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

#ifndef EOC_EXPR_HPP_
#define EOC_EXPR_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace eoc {

// Arithmetic expression over x1..xn, u1..um, t.
//
//   expr   := term (('+'|'-') term)*
//   term   := unary (('*'|'/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' unary)?            (right associative)
//   atom   := number | var | fn '(' expr (',' expr)* ')' | '(' expr ')'
//
// Functions: sin cos exp abs sign step min max. step(z) = 1 for z > 0 and 0
// otherwise; sign(0) = 0. Parsed trees are immutable; evaluation runs a flat
// postfix program with a local stack, so a FieldExpr is safe to share across
// threads.
class FieldExpr {
 public:
  FieldExpr() = default;

  // Throws ParseError on bad syntax, unknown identifier, or a variable index
  // outside (n, m).
  static FieldExpr parse(const std::string& text, int n, int m);

  // x has state_dim() entries, u has control_dim() entries. May return
  // non-finite values (e.g. division by zero); callers decide whether that
  // is an error.
  double eval(const double* x, const double* u, double t) const;

  // Canonical text form; parse(print()) reproduces the tree exactly.
  std::string print() const;

  bool uses_state() const { return uses_state_; }
  bool uses_control() const { return uses_control_; }
  bool uses_time() const { return uses_time_; }
  int state_dim() const { return n_; }
  int control_dim() const { return m_; }
  bool empty() const { return prog_.empty(); }

  // Structural equality of the parsed trees.
  friend bool operator==(const FieldExpr& a, const FieldExpr& b);

 private:
  enum class Op : std::uint8_t {
    kConst, kPushX, kPushU, kPushT,
    kNeg, kAdd, kSub, kMul, kDiv, kPow, kPowInt,
    kSin, kCos, kExp, kAbs, kSign, kStep, kMin, kMax,
  };
  struct Instr {
    Op op;
    std::int32_t arg = 0;  // variable index or small integer exponent
    double value = 0.0;    // kConst payload
  };

  friend class ExprParser;

  std::vector<Instr> prog_;  // postfix order
  int n_ = 0;
  int m_ = 0;
  int max_stack_ = 0;
  bool uses_state_ = false;
  bool uses_control_ = false;
  bool uses_time_ = false;
};

}  // namespace eoc

#endif  // EOC_EXPR_HPP_
