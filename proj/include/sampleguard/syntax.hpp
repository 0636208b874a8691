#pragma once

// Concrete ASCII syntax for formulas:
//
//   impl  := or ( "->" impl )?
//   or    := and ( "|" and )*
//   and   := unary ( "&" unary )*
//   unary := "!" unary | "G" unary | "F" unary | "F[" dur "," dur "]" unary
//          | "X" unary | "X^" n unary | "(" impl ")" | atom
//
// Durations are minutes written as "10", "2.5", "7/2", optionally suffixed
// with "min". `F[..]` is MTL only; `X` is LTL only.

#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sampleguard/formula.hpp"

namespace sampleguard {

namespace detail {

template <Dialect D>
class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Formula<D> parse() {
    auto f = parse_implies();
    skip_ws();
    if (pos_ != text_.size()) fail("end of input");
    return f;
  }

 private:
  using F = Formula<D>;

  [[noreturn]] void fail(const std::string& expected, ErrorCode code = ErrorCode::Syntax) const {
    throw SyntaxError(code, pos_, "expected " + expected);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(std::string_view tok) {
    skip_ws();
    if (text_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  void expect(std::string_view tok) {
    if (!accept(tok)) fail("'" + std::string(tok) + "'");
  }

  F parse_implies() {
    F lhs = parse_or();
    if (accept("->")) return F::implies(lhs, parse_implies());
    return lhs;
  }

  F parse_or() {
    F acc = parse_and();
    while (accept("|")) acc = F::disj(acc, parse_and());
    return acc;
  }

  F parse_and() {
    F acc = parse_unary();
    while (accept("&")) acc = F::conj(acc, parse_unary());
    return acc;
  }

  F parse_unary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("formula");
    char c = text_[pos_];
    if (c == '!') {
      ++pos_;
      return F::negate(parse_unary());
    }
    if (c == '(') {
      ++pos_;
      F inner = parse_implies();
      expect(")");
      return inner;
    }
    if (c == 'G') {
      ++pos_;
      return F::globally(parse_unary());
    }
    if (c == 'F') {
      ++pos_;
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == '[') return parse_interval();
      return F::eventually(parse_unary());
    }
    if (c == 'X') {
      if constexpr (D == Dialect::Mtl) {
        fail("MTL operator (next 'X' is LTL only)");
      } else {
        ++pos_;
        std::size_t j = 1;
        if (pos_ < text_.size() && text_[pos_] == '^') {
          ++pos_;
          std::size_t start = pos_;
          while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
          if (start == pos_) fail("exponent after 'X^'");
          auto v = parse_int(text_.substr(start, pos_ - start));
          if (!v || *v > 100000) {
            pos_ = start;
            fail("exponent no larger than 100000");
          }
          j = static_cast<std::size_t>(*v);
        }
        return F::next_pow(j, parse_unary());
      }
    }
    if (c >= 'a' && c <= 'z') {
      std::size_t start = pos_;
      while (pos_ < text_.size()) {
        char d = text_[pos_];
        if ((d >= 'a' && d <= 'z') || (d >= '0' && d <= '9') || d == '_')
          ++pos_;
        else
          break;
      }
      return F::atom(std::string(text_.substr(start, pos_ - start)));
    }
    fail("atom, '!', '(', 'G', 'F' or 'X'");
  }

  F parse_interval() {
    std::size_t bracket = pos_;
    if constexpr (D == Dialect::Ltl) {
      throw SyntaxError(ErrorCode::IntervalNotAllowed, bracket, "untimed operator (interval bounds are MTL only)");
    } else {
      ++pos_;
      Duration lo = parse_bound(',');
      expect(",");
      Duration hi = parse_bound(']');
      expect("]");
      if (hi < lo)
        throw SyntaxError(ErrorCode::Duration, bracket,
                          "lower bound <= upper bound, got [" + lo.str() + "," + hi.str() + "]");
      return F::eventually_within(lo, hi, parse_unary());
    }
  }

  Duration parse_bound(char terminator) {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != terminator && text_[pos_] != ']' && text_[pos_] != ',') ++pos_;
    if (pos_ >= text_.size()) {
      pos_ = start;
      fail(std::string("'") + terminator + "' after duration");
    }
    try {
      return parse_duration(text_.substr(start, pos_ - start));
    } catch (const Error& e) {
      throw SyntaxError(e.code(), start, "duration literal (" + std::string(e.what()) + ")");
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

template <Dialect D>
void print(std::string& out, const Formula<D>& f);

template <Dialect D>
void print_operand(std::string& out, const Formula<D>& f, bool parens) {
  if (parens) out += '(';
  print(out, f);
  if (parens) out += ')';
}

template <Dialect D>
void print(std::string& out, const Formula<D>& f) {
  switch (f.op()) {
    case Op::Atom: out += f.atom_value().name; return;
    case Op::Not:
      out += '!';
      print_operand(out, f.child(), is_binary(f.child().op()));
      return;
    case Op::Globally:
      out += "G ";
      print_operand(out, f.child(), true);
      return;
    case Op::Eventually:
      out += "F ";
      print_operand(out, f.child(), is_binary(f.child().op()));
      return;
    case Op::EventuallyWithin:
      out += "F[" + f.lo().str() + "," + f.hi().str() + "] ";
      print_operand(out, f.child(), is_binary(f.child().op()));
      return;
    case Op::Next: {
      std::size_t j = 0;
      Formula<D> inner = f;
      while (inner.op() == Op::Next) {
        ++j;
        inner = inner.child();
      }
      out += j == 1 ? std::string("X ") : "X^" + std::to_string(j) + " ";
      print_operand(out, inner, is_binary(inner.op()));
      return;
    }
    case Op::And:
    case Op::Or:
    case Op::Implies: {
      const char* sym = f.op() == Op::And ? " & " : f.op() == Op::Or ? " | " : " -> ";
      bool chain = f.op() != Op::Implies;
      // Left-nested chains of & or | print flat and re-parse left-associatively.
      print_operand(out, f.lhs(), is_binary(f.lhs().op()) && !(chain && f.lhs().op() == f.op()));
      out += sym;
      print_operand(out, f.rhs(), is_binary(f.rhs().op()));
      return;
    }
  }
}

}  // namespace detail

inline MtlFormula parse_mtl(std::string_view text) { return detail::Parser<Dialect::Mtl>(text).parse(); }
inline LtlFormula parse_ltl(std::string_view text) { return detail::Parser<Dialect::Ltl>(text).parse(); }

template <Dialect D>
std::string format_formula(const Formula<D>& f) {
  std::string out;
  detail::print(out, f);
  return out;
}

struct FormulaLine {
  std::size_t line = 0;  // 1-based
  std::string text;
};

/// One formula per line; `#` starts a comment; blank lines are skipped.
inline std::vector<FormulaLine> split_formula_lines(std::istream& in) {
  std::vector<FormulaLine> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    out.push_back({n, line.substr(first, last - first + 1)});
  }
  return out;
}

inline std::vector<FormulaLine> read_formula_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open formula file '" + path + "'");
  return split_formula_lines(in);
}

}  // namespace sampleguard
