#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sampleguard/duration.hpp"
#include "sampleguard/error.hpp"

namespace sampleguard {

enum class AtomKind { Overload, Blackout, Generic };

/// Atomic proposition. Names matching `oload_<n>` / `blackout_<n>` are bound
/// to line n / consumer node n of a grid; everything else is Generic.
struct Atom {
  std::string name;
  AtomKind kind = AtomKind::Generic;
  std::uint32_t id = 0;  // meaningful only for Overload and Blackout

  friend bool operator==(const Atom& a, const Atom& b) { return a.name == b.name; }
};

inline bool is_valid_atom_name(const std::string& name) {
  if (name.empty() || name[0] < 'a' || name[0] > 'z') return false;
  for (char c : name) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    if (!ok) return false;
  }
  return true;
}

inline Atom make_atom(const std::string& name) {
  if (!is_valid_atom_name(name)) throw Error(ErrorCode::Syntax, "invalid atom name '" + name + "'");
  Atom atom{name, AtomKind::Generic, 0};
  auto bind = [&](const std::string& prefix, AtomKind kind) {
    if (name.rfind(prefix, 0) != 0) return;
    auto id = detail::parse_int(std::string_view(name).substr(prefix.size()));
    if (id && *id <= UINT32_MAX) {
      atom.kind = kind;
      atom.id = static_cast<std::uint32_t>(*id);
    }
  };
  bind("oload_", AtomKind::Overload);
  bind("blackout_", AtomKind::Blackout);
  return atom;
}

inline std::string overload_atom_name(std::uint32_t line) { return "oload_" + std::to_string(line); }
inline std::string blackout_atom_name(std::uint32_t node) { return "blackout_" + std::to_string(node); }

enum class Op { Atom, Not, And, Or, Implies, Globally, Eventually, EventuallyWithin, Next };

inline bool is_binary(Op op) { return op == Op::And || op == Op::Or || op == Op::Implies; }

namespace detail {

struct Node {
  Op op;
  Atom atom;
  Duration lo;
  Duration hi;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

using NodePtr = std::shared_ptr<const Node>;

inline bool same_structure(const NodePtr& a, const NodePtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->op != b->op) return false;
  switch (a->op) {
    case Op::Atom: return a->atom.name == b->atom.name;
    case Op::EventuallyWithin:
      return a->lo == b->lo && a->hi == b->hi && same_structure(a->lhs, b->lhs);
    default: return same_structure(a->lhs, b->lhs) && same_structure(a->rhs, b->rhs);
  }
}

inline std::size_t depth_of(const NodePtr& n) {
  if (!n) return 0;
  std::size_t d = std::max(depth_of(n->lhs), depth_of(n->rhs));
  return d + 1;
}

}  // namespace detail

enum class Dialect { Mtl, Ltl };

/// Immutable formula tree. Mtl admits timed eventually `F[lo,hi]`, Ltl admits
/// next `X`. Both share the boolean core plus `G` and untimed `F`.
template <Dialect D>
class Formula {
 public:
  static Formula atom(const Atom& a) { return Formula(make(Op::Atom, a)); }
  static Formula atom(const std::string& name) { return atom(make_atom(name)); }
  static Formula negate(const Formula& f) { return unary(Op::Not, f); }
  static Formula conj(const Formula& a, const Formula& b) { return binary(Op::And, a, b); }
  static Formula disj(const Formula& a, const Formula& b) { return binary(Op::Or, a, b); }
  static Formula implies(const Formula& a, const Formula& b) { return binary(Op::Implies, a, b); }
  static Formula globally(const Formula& f) { return unary(Op::Globally, f); }
  static Formula eventually(const Formula& f) { return unary(Op::Eventually, f); }

  static Formula eventually_within(const Duration& lo, const Duration& hi, const Formula& f)
    requires(D == Dialect::Mtl)
  {
    if (lo.value() < 0 || hi.value() < 0) throw Error(ErrorCode::Duration, "negative interval bound");
    if (hi < lo) throw Error(ErrorCode::Duration, "interval lower bound " + lo.str() + " exceeds upper bound " + hi.str());
    auto n = std::make_shared<detail::Node>();
    n->op = Op::EventuallyWithin;
    n->lo = lo;
    n->hi = hi;
    n->lhs = f.node_;
    return Formula(std::move(n));
  }

  static Formula next(const Formula& f)
    requires(D == Dialect::Ltl)
  {
    return unary(Op::Next, f);
  }

  /// X^j f as j nested Next nodes; X^0 f is f itself.
  static Formula next_pow(std::size_t j, Formula f)
    requires(D == Dialect::Ltl)
  {
    for (std::size_t i = 0; i < j; ++i) f = next(f);
    return f;
  }

  Op op() const { return node_->op; }
  const Atom& atom_value() const { return node_->atom; }
  const Duration& lo() const { return node_->lo; }
  const Duration& hi() const { return node_->hi; }
  Formula lhs() const { return Formula(node_->lhs); }
  Formula rhs() const { return Formula(node_->rhs); }
  /// Operand of a unary operator.
  Formula child() const { return Formula(node_->lhs); }

  std::size_t depth() const { return detail::depth_of(node_); }

  friend bool operator==(const Formula& a, const Formula& b) { return detail::same_structure(a.node_, b.node_); }

  const detail::NodePtr& node() const { return node_; }

  /// Re-labels a tree from another dialect; only valid on the shared core.
  static std::optional<Formula> from_node(const detail::NodePtr& n) {
    if (!admits(n)) return std::nullopt;
    return Formula(n);
  }

 private:
  explicit Formula(detail::NodePtr n) : node_(std::move(n)) {}

  static detail::NodePtr make(Op op, const Atom& a) {
    auto n = std::make_shared<detail::Node>();
    n->op = op;
    n->atom = a;
    return n;
  }
  static Formula unary(Op op, const Formula& f) {
    auto n = std::make_shared<detail::Node>();
    n->op = op;
    n->lhs = f.node_;
    return Formula(std::move(n));
  }
  static Formula binary(Op op, const Formula& a, const Formula& b) {
    auto n = std::make_shared<detail::Node>();
    n->op = op;
    n->lhs = a.node_;
    n->rhs = b.node_;
    return Formula(std::move(n));
  }
  static bool admits(const detail::NodePtr& n) {
    if (!n) return true;
    if (D == Dialect::Mtl && n->op == Op::Next) return false;
    if (D == Dialect::Ltl && n->op == Op::EventuallyWithin) return false;
    return admits(n->lhs) && admits(n->rhs);
  }

  detail::NodePtr node_;
};

using MtlFormula = Formula<Dialect::Mtl>;
using LtlFormula = Formula<Dialect::Ltl>;

inline std::optional<MtlFormula> to_mtl(const LtlFormula& f) { return MtlFormula::from_node(f.node()); }
inline std::optional<LtlFormula> to_ltl(const MtlFormula& f) { return LtlFormula::from_node(f.node()); }

/// An atom or its negation.
struct Literal {
  Atom atom;
  bool positive = true;

  bool eval(bool value) const { return positive ? value : !value; }
  friend bool operator==(const Literal& a, const Literal& b) {
    return a.atom.name == b.atom.name && a.positive == b.positive;
  }
};

template <Dialect D>
std::optional<Literal> as_literal(const Formula<D>& f) {
  if (f.op() == Op::Atom) return Literal{f.atom_value(), true};
  if (f.op() == Op::Not && f.child().op() == Op::Atom) return Literal{f.child().atom_value(), false};
  return std::nullopt;
}

template <Dialect D>
Formula<D> from_literal(const Literal& l) {
  auto a = Formula<D>::atom(l.atom);
  return l.positive ? a : Formula<D>::negate(a);
}

/// Flattens a left- or right-nested chain of `op` into its operands, in order.
template <Dialect D>
void flatten(const Formula<D>& f, Op op, std::vector<Formula<D>>& out) {
  if (f.op() == op) {
    flatten(f.lhs(), op, out);
    flatten(f.rhs(), op, out);
  } else {
    out.push_back(f);
  }
}

template <Dialect D>
std::vector<Formula<D>> conjuncts(const Formula<D>& f) {
  std::vector<Formula<D>> out;
  flatten(f, Op::And, out);
  return out;
}

/// Left-nested conjunction of a non-empty list.
template <Dialect D>
Formula<D> conjoin(const std::vector<Formula<D>>& parts) {
  if (parts.empty()) throw Error(ErrorCode::Domain, "empty conjunction");
  Formula<D> acc = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) acc = Formula<D>::conj(acc, parts[i]);
  return acc;
}

}  // namespace sampleguard
