#pragma once

// Reference evaluators. These are deliberately direct: the dense evaluator
// works on maximal intervals of the piecewise-constant signal, the sampled
// evaluator unrolls every X^j disjunct at every position.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <vector>

#include "sampleguard/formula.hpp"
#include "sampleguard/syntax.hpp"
#include "sampleguard/trace.hpp"

namespace sampleguard {

inline bool value_of(const Assignment& a, const std::string& atom) {
  auto it = a.find(atom);
  if (it == a.end()) throw Error(ErrorCode::UnknownAtom, "no value for atom '" + atom + "'");
  return it->second;
}

inline bool holds(const Literal& lit, const Assignment& a) { return lit.eval(value_of(a, lit.atom.name)); }

namespace detail {

inline Verdict earliest(const Verdict& a, const Verdict& b) {
  if (a.sat()) return b;
  if (b.sat()) return a;
  if (a.time && b.time) return *b.time < *a.time ? b : a;
  if (a.index && b.index) return *b.index < *a.index ? b : a;
  return a;
}

inline std::optional<std::vector<Literal>> literals_of(const auto& f) {
  std::vector<Literal> out;
  for (const auto& c : conjuncts(f)) {
    auto l = as_literal(c);
    if (!l) return std::nullopt;
    out.push_back(*l);
  }
  return out;
}

struct TimedResponse {
  Literal trigger;
  Literal response;
  Duration kappa;
};

inline Verdict eval_invariant_dense(const std::vector<Literal>& lits, const DenseTrace& dense) {
  for (const auto& seg : dense.segments)
    for (const auto& l : lits)
      if (!holds(l, seg.atoms)) return Verdict::violated_at_time(seg.start);
  return Verdict::satisfied();
}

// For every maximal stretch on which q is false, the worst trigger is the
// earliest p-instant t0 in it; the obligation fails iff the next q-instant
// is later than t0 + kappa. The final segment is closed at the horizon, so a
// stretch reaching the horizon fails iff it already covers [t0, t0 + kappa].
inline Verdict eval_response_dense(const TimedResponse& r, const DenseTrace& dense) {
  const auto& segs = dense.segments;
  std::size_t n = segs.size();
  std::size_t k = 0;
  while (k < n) {
    if (holds(r.response, segs[k].atoms)) {
      ++k;
      continue;
    }
    std::size_t first = k;
    while (k < n && !holds(r.response, segs[k].atoms)) ++k;
    std::optional<Duration> t0;
    for (std::size_t i = first; i < k; ++i)
      if (holds(r.trigger, segs[i].atoms)) {
        t0 = segs[i].start;
        break;
      }
    if (!t0) continue;
    Duration deadline = *t0 + r.kappa;
    bool terminal = k == n;
    bool fails = terminal ? deadline <= dense.horizon : deadline < segs[k].start;
    if (fails) return Verdict::violated_at_time(deadline);
  }
  return Verdict::satisfied();
}

struct WindowResponse {
  Literal trigger;
  /// (offset j, literal) pairs; satisfied at i if some literal holds at i + j.
  std::vector<std::pair<std::size_t, Literal>> disjuncts;
};

inline std::optional<std::pair<std::size_t, Literal>> as_next_literal(const LtlFormula& f) {
  std::size_t j = 0;
  LtlFormula cur = f;
  while (cur.op() == Op::Next) {
    ++j;
    cur = cur.child();
  }
  auto lit = as_literal(cur);
  if (!lit) return std::nullopt;
  return std::make_pair(j, *lit);
}

inline Verdict eval_invariant_sampled(const std::vector<Literal>& lits, const SampledTrace& trace) {
  for (std::size_t i = 0; i < trace.samples.size(); ++i)
    for (const auto& l : lits)
      if (!holds(l, trace.samples[i])) return Verdict::violated_at_index(i);
  return Verdict::satisfied();
}

// Optimistic finite-prefix reading: a position whose window runs past the
// end of the trace is never reported as a violation.
inline Verdict eval_window_sampled(const WindowResponse& w, const SampledTrace& trace) {
  std::size_t n = trace.samples.size();
  std::size_t reach = 0;
  for (const auto& d : w.disjuncts) reach = std::max(reach, d.first);
  for (std::size_t i = 0; i < n; ++i) {
    if (!holds(w.trigger, trace.samples[i])) continue;
    bool discharged = false;
    for (const auto& [j, lit] : w.disjuncts)
      if (i + j < n && holds(lit, trace.samples[i + j])) {
        discharged = true;
        break;
      }
    if (!discharged && i + reach < n) return Verdict::violated_at_index(i);
  }
  return Verdict::satisfied();
}

}  // namespace detail

/// Dense-time verdict for conjunctions of `G (p -> F[0,k] q)` and
/// `G (literals)`. Violated carries the earliest instant at which a
/// violation is certain.
inline Verdict eval_mtl_dense(const MtlFormula& phi, const DenseTrace& dense) {
  dense.validate();
  Verdict result = Verdict::satisfied();
  for (const auto& c : conjuncts(phi)) {
    auto unsupported = [&] {
      return Error(ErrorCode::UnsupportedFragment, "cannot evaluate '" + format_formula(c) + "'");
    };
    if (c.op() != Op::Globally) throw unsupported();
    MtlFormula body = c.child();
    Verdict v;
    if (body.op() == Op::Implies && body.rhs().op() == Op::EventuallyWithin) {
      auto p = as_literal(body.lhs());
      auto q = as_literal(body.rhs().child());
      if (!p || !q || !body.rhs().lo().is_zero()) throw unsupported();
      v = detail::eval_response_dense({*p, *q, body.rhs().hi()}, dense);
    } else if (auto lits = detail::literals_of(body)) {
      v = detail::eval_invariant_dense(*lits, dense);
    } else {
      throw unsupported();
    }
    result = detail::earliest(result, v);
  }
  return result;
}

/// Finite-prefix verdict for conjunctions of `G (p -> X^j0 q0 | ... )` and
/// `G (literals)` by brute-force unrolling. Violated carries the earliest
/// window start.
inline Verdict eval_ltl_sampled(const LtlFormula& phi, const SampledTrace& trace) {
  Verdict result = Verdict::satisfied();
  for (const auto& c : conjuncts(phi)) {
    auto unsupported = [&] {
      return Error(ErrorCode::UnsupportedFragment, "cannot evaluate '" + format_formula(c) + "'");
    };
    if (c.op() != Op::Globally) throw unsupported();
    LtlFormula body = c.child();
    Verdict v;
    if (auto lits = detail::literals_of(body)) {
      v = detail::eval_invariant_sampled(*lits, trace);
    } else if (body.op() == Op::Implies) {
      auto p = as_literal(body.lhs());
      if (!p) throw unsupported();
      std::vector<LtlFormula> terms;
      flatten(body.rhs(), Op::Or, terms);
      detail::WindowResponse w{*p, {}};
      for (const auto& t : terms) {
        auto d = detail::as_next_literal(t);
        if (!d) throw unsupported();
        w.disjuncts.push_back(*d);
      }
      v = detail::eval_window_sampled(w, trace);
    } else {
      throw unsupported();
    }
    result = detail::earliest(result, v);
  }
  return result;
}

}  // namespace sampleguard
