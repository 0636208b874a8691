#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sampleguard/formula.hpp"
#include "sampleguard/syntax.hpp"

namespace sampleguard {

/// Number of consecutive samples m = floor(kappa / delta) over which a
/// bounded-response obligation must be discharged. Requires kappa > delta.
inline std::int64_t compute_horizon(const Duration& kappa, const Duration& delta) {
  if (!delta.is_positive()) throw Error(ErrorCode::Domain, "sampling period must be positive");
  if (kappa <= delta)
    throw Error(ErrorCode::SamplingTooCoarse,
                "kappa " + kappa.str() + " min must exceed sampling period " + delta.str() + " min");
  return kappa.floor_div(delta);
}

struct Assumption {
  enum class Kind { MinDwell, SamplingFasterThan };
  Kind kind = Kind::MinDwell;
  /// MinDwell: the atom whose violating value must persist long enough to be
  /// sampled; `violating_value` is the value that falsifies the invariant.
  std::string atom;
  bool violating_value = true;
  /// SamplingFasterThan: kappa. MinDwell: unresolved until checked against a grid.
  std::optional<Duration> bound;

  friend bool operator==(const Assumption&, const Assumption&) = default;
};

/// One conjunct of the source formula after strengthening.
struct StrengthenedPart {
  enum class Pattern { BoundedResponse, Invariant };
  Pattern pattern = Pattern::Invariant;
  MtlFormula source;
  LtlFormula ltl;
  std::optional<std::int64_t> horizon_m;  // BoundedResponse only
  std::optional<Duration> kappa;          // BoundedResponse only
  std::optional<Literal> trigger;         // BoundedResponse: p
  std::optional<Literal> response;        // BoundedResponse: q
  std::vector<Literal> invariant;         // Invariant: literals that must always hold
};

struct StrengthenResult {
  LtlFormula ltl;
  /// Largest horizon over all bounded-response parts; absent if there are none.
  std::optional<std::int64_t> horizon_m;
  std::vector<Assumption> assumptions;
  MtlFormula source;
  Duration delta;
  std::vector<StrengthenedPart> parts;
};

namespace detail {

inline std::optional<std::vector<Literal>> literal_conjunction(const MtlFormula& f) {
  std::vector<Literal> out;
  for (const auto& c : conjuncts(f)) {
    auto lit = as_literal(c);
    if (!lit) return std::nullopt;
    out.push_back(*lit);
  }
  return out;
}

inline StrengthenedPart strengthen_conjunct(const MtlFormula& phi, const Duration& delta) {
  auto unsupported = [&] {
    return Error(ErrorCode::UnsupportedFragment, "'" + format_formula(phi) +
                                                     "' is neither G(p -> F[0,k] q) nor G(literals)");
  };
  if (phi.op() != Op::Globally) throw unsupported();
  MtlFormula body = phi.child();

  if (body.op() == Op::Implies && body.rhs().op() == Op::EventuallyWithin) {
    auto p = as_literal(body.lhs());
    MtlFormula timed = body.rhs();
    auto q = as_literal(timed.child());
    if (!p || !q) throw unsupported();
    if (!timed.lo().is_zero())
      throw Error(ErrorCode::NonZeroLowerBound, "interval [" + timed.lo().str() + "," + timed.hi().str() +
                                                    "] must start at 0");
    std::int64_t m = compute_horizon(timed.hi(), delta);
    LtlFormula window = from_literal<Dialect::Ltl>(*q);
    for (std::int64_t j = 1; j < m; ++j)
      window = LtlFormula::disj(window, LtlFormula::next_pow(static_cast<std::size_t>(j), from_literal<Dialect::Ltl>(*q)));
    StrengthenedPart part{StrengthenedPart::Pattern::BoundedResponse,
                          phi,
                          LtlFormula::globally(LtlFormula::implies(from_literal<Dialect::Ltl>(*p), window)),
                          m,
                          timed.hi(),
                          *p,
                          *q,
                          {}};
    return part;
  }

  if (auto lits = literal_conjunction(body)) {
    auto same = to_ltl(phi);
    return StrengthenedPart{StrengthenedPart::Pattern::Invariant, phi, *same, std::nullopt, std::nullopt,
                            std::nullopt, std::nullopt, *lits};
  }
  throw unsupported();
}

}  // namespace detail

/// Rewrites a supported MTL safety formula into an LTL formula over
/// delta-spaced samples whose satisfaction implies the original.
///
/// Supported conjuncts:
///  - `G (p -> F[0,k] q)`, p and q literals: becomes
///    `G (p -> q | X q | ... | X^(m-1) q)` with m = floor(k / delta).
///  - `G (l1 & ... & ln)` over literals: unchanged, but sound only if every
///    violation dwells longer than one sampling period (a MinDwell assumption).
inline StrengthenResult strengthen(const MtlFormula& phi, const Duration& delta) {
  if (!delta.is_positive()) throw Error(ErrorCode::Domain, "sampling period must be positive");
  std::vector<StrengthenedPart> parts;
  for (const auto& c : conjuncts(phi)) parts.push_back(detail::strengthen_conjunct(c, delta));

  std::vector<LtlFormula> ltl_parts;
  std::vector<Assumption> assumptions;
  std::optional<std::int64_t> horizon;
  auto add = [&](Assumption a) {
    if (std::find(assumptions.begin(), assumptions.end(), a) == assumptions.end()) assumptions.push_back(std::move(a));
  };
  for (const auto& part : parts) {
    ltl_parts.push_back(part.ltl);
    if (part.pattern == StrengthenedPart::Pattern::BoundedResponse) {
      horizon = std::max(horizon.value_or(0), *part.horizon_m);
      add({Assumption::Kind::SamplingFasterThan, "", false, part.kappa});
    } else {
      for (const auto& lit : part.invariant) add({Assumption::Kind::MinDwell, lit.atom.name, !lit.positive, std::nullopt});
    }
  }
  return StrengthenResult{conjoin(ltl_parts), horizon, std::move(assumptions), phi, delta, std::move(parts)};
}

inline nlohmann::json to_json(const Assumption& a) {
  nlohmann::json j;
  if (a.kind == Assumption::Kind::MinDwell) {
    j["kind"] = "min_dwell";
    j["atom"] = a.atom;
    j["violating_value"] = a.violating_value;
  } else {
    j["kind"] = "sampling_faster_than";
  }
  j["bound_minutes"] = a.bound ? nlohmann::json(a.bound->str()) : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json to_json(const StrengthenResult& r) {
  nlohmann::json j;
  j["source"] = format_formula(r.source);
  j["ltl"] = format_formula(r.ltl);
  j["m"] = r.horizon_m ? nlohmann::json(*r.horizon_m) : nlohmann::json(nullptr);
  j["delta_minutes"] = r.delta.str();
  j["assumptions"] = nlohmann::json::array();
  for (const auto& a : r.assumptions) j["assumptions"].push_back(to_json(a));
  return j;
}

}  // namespace sampleguard
