#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "sampleguard/grid.hpp"
#include "sampleguard/strengthen.hpp"

namespace sampleguard {

struct AssumptionReport {
  Assumption assumption;
  bool satisfied = false;
  std::string note;
};

/// Checks each assumption recorded by `strengthen` against a grid.
///
/// MinDwell on a blackout atom is satisfied when the grid's recovery dwell
/// exceeds the sampling period, which is what makes every blackout visible
/// to at least one sample. The note also states whether the stronger
/// ordering gamma > kappa holds. Other atoms carry no dwell guarantee.
inline std::vector<AssumptionReport> check_assumptions(const StrengthenResult& result, const GridSpec& grid) {
  std::optional<Duration> kappa;
  for (const auto& a : result.assumptions)
    if (a.kind == Assumption::Kind::SamplingFasterThan && a.bound && (!kappa || *kappa < *a.bound)) kappa = a.bound;

  std::vector<AssumptionReport> out;
  for (const auto& a : result.assumptions) {
    AssumptionReport r{a, false, ""};
    if (a.kind == Assumption::Kind::SamplingFasterThan) {
      r.satisfied = result.delta < *a.bound;
      r.note = "delta " + result.delta.str() + (r.satisfied ? " < " : " >= ") + "kappa " + a.bound->str();
    } else {
      Atom atom = make_atom(a.atom);
      if (atom.kind != AtomKind::Blackout || !a.violating_value || !grid.is_consumer(atom.id)) {
        r.note = "grid declares no minimum dwell for '" + a.atom + "'";
      } else {
        r.assumption.bound = grid.gamma_recovery;
        r.satisfied = result.delta < grid.gamma_recovery;
        r.note = "gamma_recovery " + grid.gamma_recovery.str() + (r.satisfied ? " > " : " <= ") + "delta " +
                 result.delta.str();
        if (kappa)
          r.note += std::string("; the stronger gamma > kappa (") + kappa->str() + ") " +
                    (*kappa < grid.gamma_recovery ? "also holds" : "does not hold");
        else
          r.note += "; the stronger gamma > kappa ordering is not checked (no bounded-response conjunct)";
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline nlohmann::json to_json(const AssumptionReport& r) {
  nlohmann::json j = to_json(r.assumption);
  j["satisfied"] = r.satisfied;
  j["note"] = r.note;
  return j;
}

}  // namespace sampleguard
