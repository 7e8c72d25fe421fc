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

#include "eoc/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "eoc/errors.hpp"

namespace eoc {

namespace {

enum class TokKind { kNumber, kIdent, kOp, kEnd };

struct Token {
  TokKind kind;
  std::size_t pos;
  double number = 0.0;
  char op = 0;
  std::string ident;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) { advance(); }

  const Token& peek() const { return cur_; }

  Token take() {
    Token t = cur_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (i_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[i_]))) ++i_;
    cur_.pos = i_;
    if (i_ >= text_.size()) {
      cur_.kind = TokKind::kEnd;
      return;
    }
    char c = text_[i_];
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i_ + 1 < text_.size() &&
        std::isdigit(static_cast<unsigned char>(text_[i_ + 1])))) {
      const char* begin = text_.c_str() + i_;
      char* end = nullptr;
      double v = std::strtod(begin, &end);
      if (end == begin) throw ParseError("invalid number", i_);
      cur_.kind = TokKind::kNumber;
      cur_.number = v;
      i_ += static_cast<std::size_t>(end - begin);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i_;
      while (j < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[j])) || text_[j] == '_'))
        ++j;
      cur_.kind = TokKind::kIdent;
      cur_.ident = text_.substr(i_, j - i_);
      i_ = j;
      return;
    }
    if (std::strchr("+-*/^(),", c)) {
      cur_.kind = TokKind::kOp;
      cur_.op = c;
      ++i_;
      return;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", i_);
  }

  const std::string& text_;
  std::size_t i_ = 0;
  Token cur_;
};

struct FnInfo {
  const char* name;
  int arity;
};

const FnInfo kFunctions[] = {
    {"sin", 1}, {"cos", 1}, {"exp", 1}, {"abs", 1},
    {"sign", 1}, {"step", 1}, {"min", 2}, {"max", 2},
};

const FnInfo* find_function(const std::string& name) {
  for (const auto& f : kFunctions)
    if (name == f.name) return &f;
  return nullptr;
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // Prefer the short form when it round-trips.
  char shortbuf[40];
  std::snprintf(shortbuf, sizeof(shortbuf), "%.15g", v);
  if (std::strtod(shortbuf, nullptr) == v) return shortbuf;
  return buf;
}

}  // namespace

class ExprParser {
 public:
  ExprParser(const std::string& text, int n, int m) : lex_(text), n_(n), m_(m) {}

  FieldExpr run() {
    FieldExpr e;
    e.n_ = n_;
    e.m_ = m_;
    out_ = &e;
    parse_expr();
    const Token& t = lex_.peek();
    if (t.kind != TokKind::kEnd)
      throw ParseError("unexpected trailing input", t.pos);
    e.max_stack_ = max_depth_;
    return e;
  }

  // Precedence climbing per the grammar in the header.
  void parse_expr() {
    parse_term();
    while (lex_.peek().kind == TokKind::kOp &&
           (lex_.peek().op == '+' || lex_.peek().op == '-')) {
      char op = lex_.take().op;
      parse_term();
      emit(op == '+' ? FieldExpr::Op::kAdd : FieldExpr::Op::kSub, -1);
    }
  }

  void parse_term() {
    parse_unary();
    while (lex_.peek().kind == TokKind::kOp &&
           (lex_.peek().op == '*' || lex_.peek().op == '/')) {
      char op = lex_.take().op;
      parse_unary();
      emit(op == '*' ? FieldExpr::Op::kMul : FieldExpr::Op::kDiv, -1);
    }
  }

  void parse_unary() {
    if (lex_.peek().kind == TokKind::kOp && lex_.peek().op == '-') {
      lex_.take();
      parse_unary();
      emit(FieldExpr::Op::kNeg, 0);
      return;
    }
    parse_power();
  }

  void parse_power() {
    parse_atom();
    if (lex_.peek().kind == TokKind::kOp && lex_.peek().op == '^') {
      lex_.take();
      // Small non-negative integer constant exponents compile to repeated
      // multiplication (kPowInt); everything else goes through pow().
      std::size_t mark = out_->prog_.size();
      parse_unary();
      if (out_->prog_.size() == mark + 1 &&
          out_->prog_[mark].op == FieldExpr::Op::kConst) {
        double v = out_->prog_[mark].value;
        if (v == std::floor(v) && v >= 0.0 && v <= 8.0) {
          out_->prog_.resize(mark);
          --depth_;
          FieldExpr::Instr in;
          in.op = FieldExpr::Op::kPowInt;
          in.arg = static_cast<std::int32_t>(v);
          out_->prog_.push_back(in);
          return;
        }
      }
      emit(FieldExpr::Op::kPow, -1);
    }
  }

  void parse_atom() {
    Token t = lex_.take();
    if (t.kind == TokKind::kNumber) {
      FieldExpr::Instr in;
      in.op = FieldExpr::Op::kConst;
      in.value = t.number;
      out_->prog_.push_back(in);
      push_depth();
      return;
    }
    if (t.kind == TokKind::kIdent) {
      if (const FnInfo* fn = find_function(t.ident)) {
        expect('(');
        parse_expr();
        for (int k = 1; k < fn->arity; ++k) {
          expect(',');
          parse_expr();
        }
        expect(')');
        emit_function(t.ident, fn->arity);
        return;
      }
      parse_variable(t);
      return;
    }
    if (t.kind == TokKind::kOp && t.op == '(') {
      parse_expr();
      expect(')');
      return;
    }
    throw ParseError("expected a value", t.pos);
  }

 private:
  void parse_variable(const Token& t) {
    const std::string& id = t.ident;
    if (id == "t") {
      FieldExpr::Instr in;
      in.op = FieldExpr::Op::kPushT;
      out_->prog_.push_back(in);
      out_->uses_time_ = true;
      push_depth();
      return;
    }
    if ((id[0] == 'x' || id[0] == 'u') && id.size() > 1) {
      bool digits = true;
      for (std::size_t k = 1; k < id.size(); ++k)
        if (!std::isdigit(static_cast<unsigned char>(id[k]))) digits = false;
      if (digits) {
        int idx = std::atoi(id.c_str() + 1);
        int limit = id[0] == 'x' ? n_ : m_;
        if (idx < 1 || idx > limit)
          throw ParseError("variable index out of range: " + id + " (dim " +
                               std::to_string(limit) + ")",
                           t.pos);
        FieldExpr::Instr in;
        in.op = id[0] == 'x' ? FieldExpr::Op::kPushX : FieldExpr::Op::kPushU;
        in.arg = idx - 1;
        out_->prog_.push_back(in);
        (id[0] == 'x' ? out_->uses_state_ : out_->uses_control_) = true;
        push_depth();
        return;
      }
    }
    throw ParseError("unknown identifier '" + id + "'", t.pos);
  }

  void emit_function(const std::string& name, int arity) {
    FieldExpr::Op op;
    if (name == "sin") op = FieldExpr::Op::kSin;
    else if (name == "cos") op = FieldExpr::Op::kCos;
    else if (name == "exp") op = FieldExpr::Op::kExp;
    else if (name == "abs") op = FieldExpr::Op::kAbs;
    else if (name == "sign") op = FieldExpr::Op::kSign;
    else if (name == "step") op = FieldExpr::Op::kStep;
    else if (name == "min") op = FieldExpr::Op::kMin;
    else op = FieldExpr::Op::kMax;
    emit(op, -(arity - 1));
  }

  void emit(FieldExpr::Op op, int depth_delta) {
    FieldExpr::Instr in;
    in.op = op;
    out_->prog_.push_back(in);
    depth_ += depth_delta;
  }

  void expect(char c) {
    Token t = lex_.take();
    if (t.kind != TokKind::kOp || t.op != c)
      throw ParseError(std::string("expected '") + c + "'", t.pos);
  }

  void push_depth() {
    ++depth_;
    if (depth_ > max_depth_) max_depth_ = depth_;
  }

  Lexer lex_;
  int n_, m_;
  FieldExpr* out_ = nullptr;
  int depth_ = 0;
  int max_depth_ = 0;
};

FieldExpr FieldExpr::parse(const std::string& text, int n, int m) {
  if (text.empty()) throw ParseError("empty expression", 0);
  ExprParser parser(text, n, m);
  FieldExpr e = parser.run();
  if (e.max_stack_ > 64) throw ParseError("expression too deep", 0);
  return e;
}

double FieldExpr::eval(const double* x, const double* u, double t) const {
  double stack[64];
  int sp = 0;
  for (const Instr& in : prog_) {
    switch (in.op) {
      case Op::kConst: stack[sp++] = in.value; break;
      case Op::kPushX: stack[sp++] = x[in.arg]; break;
      case Op::kPushU: stack[sp++] = u[in.arg]; break;
      case Op::kPushT: stack[sp++] = t; break;
      case Op::kNeg: stack[sp - 1] = -stack[sp - 1]; break;
      case Op::kAdd: stack[sp - 2] += stack[sp - 1]; --sp; break;
      case Op::kSub: stack[sp - 2] -= stack[sp - 1]; --sp; break;
      case Op::kMul: stack[sp - 2] *= stack[sp - 1]; --sp; break;
      case Op::kDiv: stack[sp - 2] /= stack[sp - 1]; --sp; break;
      case Op::kPow:
        stack[sp - 2] = std::pow(stack[sp - 2], stack[sp - 1]);
        --sp;
        break;
      case Op::kPowInt: {
        double base = stack[sp - 1];
        double r = 1.0;
        for (int k = 0; k < in.arg; ++k) r *= base;
        stack[sp - 1] = r;
        break;
      }
      case Op::kSin: stack[sp - 1] = std::sin(stack[sp - 1]); break;
      case Op::kCos: stack[sp - 1] = std::cos(stack[sp - 1]); break;
      case Op::kExp: stack[sp - 1] = std::exp(stack[sp - 1]); break;
      case Op::kAbs: stack[sp - 1] = std::fabs(stack[sp - 1]); break;
      case Op::kSign: {
        double v = stack[sp - 1];
        stack[sp - 1] = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
        break;
      }
      case Op::kStep: stack[sp - 1] = stack[sp - 1] > 0.0 ? 1.0 : 0.0; break;
      case Op::kMin:
        stack[sp - 2] = std::fmin(stack[sp - 2], stack[sp - 1]);
        --sp;
        break;
      case Op::kMax:
        stack[sp - 2] = std::fmax(stack[sp - 2], stack[sp - 1]);
        --sp;
        break;
    }
  }
  return stack[0];
}

namespace {

// Pretty-printer over the postfix program: rebuild text fragments with
// precedence levels (0 add, 1 mul, 2 unary, 3 power, 4 atom).
struct Frag {
  std::string text;
  int prec;
};

std::string wrap(const Frag& f, int need) {
  if (f.prec >= need) return f.text;
  return "(" + f.text + ")";
}

}  // namespace

std::string FieldExpr::print() const {
  std::vector<Frag> st;
  auto binary = [&st](const char* op, int prec) {
    Frag b = st.back(); st.pop_back();
    Frag a = st.back(); st.pop_back();
    // The parser is left-associative, so only the left operand may share the
    // precedence level; the right one always needs one level higher for the
    // round trip to reproduce the tree exactly.
    std::string s = wrap(a, prec) + " " + op + " " + wrap(b, prec + 1);
    st.push_back({s, prec});
  };
  auto fn1 = [&st](const char* name) {
    Frag a = st.back(); st.pop_back();
    st.push_back({std::string(name) + "(" + a.text + ")", 4});
  };
  for (const Instr& in : prog_) {
    switch (in.op) {
      case Op::kConst: st.push_back({format_number(in.value), in.value < 0 ? 2 : 4}); break;
      case Op::kPushX: st.push_back({"x" + std::to_string(in.arg + 1), 4}); break;
      case Op::kPushU: st.push_back({"u" + std::to_string(in.arg + 1), 4}); break;
      case Op::kPushT: st.push_back({"t", 4}); break;
      case Op::kNeg: {
        Frag a = st.back(); st.pop_back();
        st.push_back({"-" + wrap(a, 2), 2});
        break;
      }
      case Op::kAdd: binary("+", 0); break;
      case Op::kSub: binary("-", 0); break;
      case Op::kMul: binary("*", 1); break;
      case Op::kDiv: binary("/", 1); break;
      case Op::kPow: {
        Frag b = st.back(); st.pop_back();
        Frag a = st.back(); st.pop_back();
        st.push_back({wrap(a, 4) + "^" + wrap(b, 3), 3});
        break;
      }
      case Op::kPowInt: {
        Frag a = st.back(); st.pop_back();
        st.push_back({wrap(a, 4) + "^" + std::to_string(in.arg), 3});
        break;
      }
      case Op::kSin: fn1("sin"); break;
      case Op::kCos: fn1("cos"); break;
      case Op::kExp: fn1("exp"); break;
      case Op::kAbs: fn1("abs"); break;
      case Op::kSign: fn1("sign"); break;
      case Op::kStep: fn1("step"); break;
      case Op::kMin:
      case Op::kMax: {
        Frag b = st.back(); st.pop_back();
        Frag a = st.back(); st.pop_back();
        const char* name = in.op == Op::kMin ? "min" : "max";
        st.push_back({std::string(name) + "(" + a.text + ", " + b.text + ")", 4});
        break;
      }
    }
  }
  return st.empty() ? std::string() : st[0].text;
}

bool operator==(const FieldExpr& a, const FieldExpr& b) {
  if (a.prog_.size() != b.prog_.size()) return false;
  for (std::size_t i = 0; i < a.prog_.size(); ++i) {
    const auto& ia = a.prog_[i];
    const auto& ib = b.prog_[i];
    if (ia.op != ib.op || ia.arg != ib.arg) return false;
    if (ia.op == FieldExpr::Op::kConst &&
        !(ia.value == ib.value ||
          (std::isnan(ia.value) && std::isnan(ib.value))))
      return false;
  }
  return true;
}

}  // namespace eoc
