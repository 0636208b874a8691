#pragma once

#include <boost/math/distributions/beta.hpp>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sampleguard/assumptions.hpp"
#include "sampleguard/control.hpp"
#include "sampleguard/monitor.hpp"
#include "sampleguard/semantics.hpp"

namespace sampleguard {

/// Smallest N with 2 exp(-2 N eps^2) <= alpha (Chernoff-Hoeffding / Okamoto).
inline std::size_t required_samples(double epsilon, double alpha) {
  if (!(epsilon > 0 && epsilon < 1)) throw Error(ErrorCode::Domain, "epsilon must lie in (0,1)");
  if (!(alpha > 0 && alpha < 1)) throw Error(ErrorCode::Domain, "alpha must lie in (0,1)");
  double n = std::ceil(std::log(2.0 / alpha) / (2.0 * epsilon * epsilon));
  auto out = static_cast<std::size_t>(std::max(1.0, n));
  // Guard the ceiling against rounding in log(): step to the exact boundary.
  while (out > 1 && 2.0 * std::exp(-2.0 * double(out - 1) * epsilon * epsilon) <= alpha) --out;
  while (2.0 * std::exp(-2.0 * double(out) * epsilon * epsilon) > alpha) ++out;
  return out;
}

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Exact binomial interval at confidence 1 - alpha.
inline Interval clopper_pearson(std::size_t successes, std::size_t n, double alpha) {
  if (n == 0) return {0.0, 1.0};
  if (successes > n) throw Error(ErrorCode::Domain, "successes exceed trials");
  if (!(alpha > 0 && alpha < 1)) throw Error(ErrorCode::Domain, "alpha must lie in (0,1)");
  double k = static_cast<double>(successes), nn = static_cast<double>(n);
  Interval ci;
  if (successes > 0) ci.lo = boost::math::quantile(boost::math::beta_distribution<double>(k, nn - k + 1), alpha / 2);
  if (successes < n) ci.hi = boost::math::quantile(boost::math::beta_distribution<double>(k + 1, nn - k), 1 - alpha / 2);
  return ci;
}

struct SmcConfig {
  std::optional<double> epsilon;
  std::optional<std::size_t> n_fixed;
  double alpha = 0.001;
  std::uint64_t master_seed = 0;
  std::size_t jobs = 1;

  std::size_t episodes() const {
    if (epsilon.has_value() == n_fixed.has_value())
      throw Error(ErrorCode::Domain, "set exactly one of epsilon and n");
    if (!(alpha > 0 && alpha < 1)) throw Error(ErrorCode::Domain, "alpha must lie in (0,1)");
    if (n_fixed) {
      if (*n_fixed == 0) throw Error(ErrorCode::Domain, "n must be positive");
      return *n_fixed;
    }
    return required_samples(*epsilon, alpha);
  }
};

struct TraceVerdicts {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  Verdict ltl;
  Verdict mtl;
  friend bool operator==(const TraceVerdicts&, const TraceVerdicts&) = default;
};

struct SmcResult {
  std::size_t n = 0;
  std::size_t successes_ltl = 0;
  std::size_t successes_mtl = 0;
  double p_hat_ltl = 0.0;
  double p_hat_mtl = 0.0;
  Interval ci_ltl;
  Interval ci_mtl;
  double alpha = 0.0;
  std::vector<TraceVerdicts> per_trace;
  bool pairing_ok = true;
};

/// Aggregates per-trace verdicts. Order of `per_trace` is by episode index.
inline SmcResult aggregate(std::vector<TraceVerdicts> per_trace, double alpha) {
  SmcResult r;
  r.n = per_trace.size();
  r.alpha = alpha;
  for (const auto& t : per_trace) {
    if (t.ltl.sat()) ++r.successes_ltl;
    if (t.mtl.sat()) ++r.successes_mtl;
    if (t.ltl.sat() && t.mtl.violated()) r.pairing_ok = false;
  }
  if (r.n > 0) {
    r.p_hat_ltl = double(r.successes_ltl) / double(r.n);
    r.p_hat_mtl = double(r.successes_mtl) / double(r.n);
  }
  r.ci_ltl = clopper_pearson(r.successes_ltl, r.n, alpha);
  r.ci_mtl = clopper_pearson(r.successes_mtl, r.n, alpha);
  r.per_trace = std::move(per_trace);
  return r;
}

/// Runs `episode(index, seed) -> TraceVerdicts-like {ltl, mtl}` for every
/// index on up to `cfg.jobs` threads. Seeds come from derive_seed(master, index),
/// so the result does not depend on scheduling.
template <typename EpisodeFn>
SmcResult smc_run(const SmcConfig& cfg, EpisodeFn&& episode) {
  std::size_t n = cfg.episodes();
  std::vector<TraceVerdicts> out(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        std::uint64_t seed = derive_seed(cfg.master_seed, i);
        auto [ltl, mtl] = episode(i, seed);
        out[i] = TraceVerdicts{i, seed, ltl, mtl};
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  std::size_t jobs = std::max<std::size_t>(1, std::min(cfg.jobs, n));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return aggregate(std::move(out), cfg.alpha);
}

/// A satisfaction property: the MTL source and its strengthened form.
struct Property {
  MtlFormula mtl;
  StrengthenResult strengthened;
  Monitor monitor;

  static Property from(const MtlFormula& mtl, const Duration& delta) {
    auto s = strengthen(mtl, delta);
    auto m = compile_monitor(s.ltl);
    return Property{mtl, std::move(s), std::move(m)};
  }

  /// Extra time appended to episodes so every (m-1)-sample window started
  /// inside the nominal horizon is observed.
  Duration padding() const {
    std::int64_t m = strengthened.horizon_m.value_or(1);
    return strengthened.delta * (m - 1);
  }
};

struct EpisodeSetup {
  Duration horizon;  // nominal, before padding
  Duration delta;
  Duration tick;
};

/// Statistical model checking of a grid under a controller: per episode the
/// monitor decides the strengthened LTL property on the samples and the
/// dense evaluator decides the MTL property on the full trace.
inline SmcResult smc_estimate(const GridSpec& grid, const ControllerSpec& controller, const Property& property,
                              const SmcConfig& cfg, const EpisodeSetup& setup) {
  if (!(property.strengthened.delta == setup.delta))
    throw Error(ErrorCode::Domain, "property was strengthened for a different sampling period");
  for (const auto& rep : check_assumptions(property.strengthened, grid))
    if (!rep.satisfied) throw Error(ErrorCode::AssumptionUnsatisfied, rep.note);
  Duration total = setup.horizon + property.padding();
  TabularQController::Table q_table;
  if (controller.kind == ControllerSpec::Kind::TabularQ)
    q_table = train_tabular_q(grid, controller.q, total, setup.delta, setup.tick, splitmix64(cfg.master_seed));
  return smc_run(cfg, [&](std::size_t, std::uint64_t seed) {
    auto c = make_controller(controller, grid, seed, property.monitor, q_table);
    ControllerRef ref{*c};
    EpisodeRecord rec = run_episode(grid, ref, total, setup.delta, setup.tick, seed);
    return std::make_pair(monitor_run(property.monitor, rec.sampled), eval_mtl_dense(property.mtl, rec.dense));
  });
}

struct PairingReport {
  bool pairing_ok = true;
  bool empty = false;
  /// Episodes with MTL satisfied but LTL violated (the strengthening is not complete).
  std::vector<std::size_t> strictness_witnesses;
  /// Episodes with LTL satisfied but MTL violated; must be empty.
  std::vector<std::size_t> unsound;
};

inline PairingReport paired_bound_check(const SmcResult& r) {
  PairingReport rep;
  rep.empty = r.per_trace.empty();
  for (const auto& t : r.per_trace) {
    if (t.mtl.sat() && t.ltl.violated()) rep.strictness_witnesses.push_back(t.index);
    if (t.ltl.sat() && t.mtl.violated()) rep.unsound.push_back(t.index);
  }
  rep.pairing_ok = rep.unsound.empty();
  return rep;
}

inline nlohmann::json to_json(const Verdict& v) {
  if (v.sat()) return "sat";
  nlohmann::json j = {{"outcome", "violated"}};
  if (v.time) j["at_minutes"] = v.time->str();
  if (v.index) j["at_sample"] = *v.index;
  if (v.window_start) j["window_start"] = *v.window_start;
  return j;
}

inline nlohmann::json to_json(const TraceVerdicts& t) {
  return {{"index", t.index}, {"seed", t.seed}, {"ltl", to_json(t.ltl)}, {"mtl", to_json(t.mtl)}};
}

inline nlohmann::json to_json(const SmcResult& r, bool include_per_trace = true) {
  nlohmann::json j;
  j["n"] = r.n;
  j["alpha"] = r.alpha;
  j["successes_ltl"] = r.successes_ltl;
  j["successes_mtl"] = r.successes_mtl;
  j["p_hat_ltl"] = r.p_hat_ltl;
  j["p_hat_mtl"] = r.p_hat_mtl;
  j["ci_ltl"] = {r.ci_ltl.lo, r.ci_ltl.hi};
  j["ci_mtl"] = {r.ci_mtl.lo, r.ci_mtl.hi};
  j["pairing_ok"] = r.pairing_ok;
  auto rep = paired_bound_check(r);
  j["strictness_witnesses"] = rep.strictness_witnesses;
  if (include_per_trace) {
    j["per_trace"] = nlohmann::json::array();
    for (const auto& t : r.per_trace) j["per_trace"].push_back(to_json(t));
  }
  return j;
}

}  // namespace sampleguard
