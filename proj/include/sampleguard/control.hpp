#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sampleguard/monitor.hpp"
#include "sampleguard/simulator.hpp"

namespace sampleguard {

class Controller {
 public:
  virtual ~Controller() = default;
  virtual Action act(const Observation& obs) = 0;
  /// Propositions of the sample taken right after the last action.
  virtual void on_sample(const Assignment&) {}
};

/// Every single-line toggle in line order, then Noop. Ties between
/// candidates are resolved in this order.
inline std::vector<Action> candidate_actions(const GridSpec& spec, const GridState& s) {
  std::vector<Action> out;
  std::vector<std::size_t> order(spec.lines.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return spec.lines[a].id < spec.lines[b].id; });
  for (std::size_t l : order) out.push_back(Action::set_line(spec.lines[l].id, !s.line_in_service[l]));
  out.push_back(Action::noop());
  return out;
}

/// Candidate with the fewest predicted blackouts, then the smallest
/// predicted maximum load ratio; first wins ties.
inline Action least_loaded(const GridSpec& spec, const GridState& s, const std::vector<Action>& candidates) {
  Action best = candidates.front();
  std::pair<std::size_t, double> best_score{std::numeric_limits<std::size_t>::max(), 0.0};
  for (const auto& a : candidates) {
    GridState next = predict_after(spec, s, a);
    std::pair<std::size_t, double> score{static_cast<std::size_t>(std::count(next.blackout.begin(), next.blackout.end(), true)),
                                         max_load_ratio(next)};
    if (score < best_score) {
      best_score = score;
      best = a;
    }
  }
  return best;
}

class NoopController final : public Controller {
 public:
  Action act(const Observation&) override { return Action::noop(); }
};

/// Uniform over Noop and every single-line toggle.
class RandomController final : public Controller {
 public:
  RandomController(const GridSpec& spec, std::uint64_t seed) : spec_(spec), rng_(seed) {}

  Action act(const Observation& obs) override {
    std::uint64_t k = rng_.below(spec_.lines.size() + 1);
    if (k == 0) return Action::noop();
    std::size_t l = static_cast<std::size_t>(k - 1);
    return Action::set_line(spec_.lines[l].id, !obs.line_in_service[l]);
  }

 private:
  const GridSpec& spec_;
  Rng rng_;
};

/// Acts only under overload: picks the toggle (or Noop) that leaves the
/// fewest consumers dark and, among those, the lowest maximum load ratio.
class GreedyController final : public Controller {
 public:
  explicit GreedyController(const GridSpec& spec) : spec_(spec) {}

  Action act(const Observation& obs) override {
    if (max_load_ratio(obs) < 1.0) return Action::noop();
    return least_loaded(spec_, obs, candidate_actions(spec_, obs));
  }

 private:
  const GridSpec& spec_;
};

struct TabularQParams {
  double epsilon = 0.1;
  double learning_rate = 0.1;
  double discount = 0.9;
  std::size_t episodes = 20;
};

/// Epsilon-greedy Q-learning over bucketed line loads. Learns online from
/// reward -(overloaded lines) - 10 * (blackouts), observed one period later.
class TabularQController final : public Controller {
 public:
  using Table = std::map<std::string, std::vector<double>>;

  TabularQController(const GridSpec& spec, TabularQParams params, std::uint64_t seed, Table table = {})
      : spec_(spec), params_(params), rng_(seed), table_(std::move(table)) {}

  Action act(const Observation& obs) override {
    auto candidates = candidate_actions(spec_, obs);
    std::string key = state_key(obs);
    auto& q = row(key, candidates.size());
    if (last_) {
      double reward = reward_of(obs);
      double best_next = *std::max_element(q.begin(), q.end());
      auto& prev = row(last_->first, candidates.size());
      prev[last_->second] += params_.learning_rate * (reward + params_.discount * best_next - prev[last_->second]);
    }
    std::size_t choice;
    if (rng_.uniform() < params_.epsilon) {
      choice = static_cast<std::size_t>(rng_.below(candidates.size()));
    } else {
      choice = static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
    }
    last_ = std::make_pair(key, choice);
    return candidates[choice];
  }

  const Table& table() const { return table_; }
  void end_episode() { last_.reset(); }

  std::string state_key(const Observation& obs) const {
    std::string key;
    for (std::size_t l = 0; l < spec_.lines.size(); ++l) {
      if (!obs.line_in_service[l])
        key += 'x';
      else if (obs.load_ratio[l] < 0.8)
        key += '0';
      else if (obs.load_ratio[l] < 1.0)
        key += '1';
      else
        key += '2';
    }
    return key;
  }

  double reward_of(const Observation& obs) const {
    double r = 0.0;
    for (std::size_t l = 0; l < spec_.lines.size(); ++l)
      if (is_overloaded(obs, l)) r -= 1.0;
    for (std::size_t i = 0; i < spec_.nodes.size(); ++i)
      if (obs.blackout[i]) r -= 10.0;
    return r;
  }

 private:
  std::vector<double>& row(const std::string& key, std::size_t n) {
    auto& r = table_[key];
    if (r.size() != n) r.assign(n, 0.0);
    return r;
  }

  const GridSpec& spec_;
  TabularQParams params_;
  Rng rng_;
  Table table_;
  std::optional<std::pair<std::string, std::size_t>> last_;
};

struct ShieldDecision {
  Action action;
  bool overridden = false;
  /// No candidate was predicted safe; the least-loaded one was taken.
  bool gap = false;
};

/// True if the next sample after `a`, predicted from the current state,
/// keeps every live monitor alive.
inline bool predicted_safe(const GridSpec& spec, const Monitor& monitor, const MonitorState& states,
                           const Observation& obs, const Action& a) {
  if (!states.alive()) return true;
  Assignment next = atoms_of(spec, predict_after(spec, obs, a));
  MonitorState probe = states;
  advance(monitor, probe, next);
  return probe.alive();
}

/// One-step shield: keeps `proposed` if predicted safe, otherwise the least
/// loaded safe candidate, otherwise the least loaded candidate overall.
inline ShieldDecision shield_act(const GridSpec& spec, const Monitor& monitor, const MonitorState& states,
                                 const Observation& obs, const Action& proposed) {
  if (predicted_safe(spec, monitor, states, obs, proposed)) return {proposed, false, false};
  auto candidates = candidate_actions(spec, obs);
  std::vector<Action> safe;
  for (const auto& c : candidates)
    if (predicted_safe(spec, monitor, states, obs, c)) safe.push_back(c);
  if (!safe.empty()) return {least_loaded(spec, obs, safe), true, false};
  return {least_loaded(spec, obs, candidates), true, true};
}

class ShieldedController final : public Controller {
 public:
  ShieldedController(const GridSpec& spec, std::unique_ptr<Controller> inner, Monitor monitor)
      : spec_(spec), inner_(std::move(inner)), monitor_(std::move(monitor)), states_(initial_state(monitor_)) {}

  Action act(const Observation& obs) override {
    Action proposed = inner_->act(obs);
    ShieldDecision d = shield_act(spec_, monitor_, states_, obs, proposed);
    if (d.overridden) ++overrides_;
    if (d.gap) ++gaps_;
    return d.action;
  }

  void on_sample(const Assignment& sample) override {
    advance(monitor_, states_, sample);
    inner_->on_sample(sample);
  }

  std::size_t overrides() const { return overrides_; }
  std::size_t shield_gaps() const { return gaps_; }
  const MonitorState& monitor_state() const { return states_; }

 private:
  const GridSpec& spec_;
  std::unique_ptr<Controller> inner_;
  Monitor monitor_;
  MonitorState states_;
  std::size_t overrides_ = 0;
  std::size_t gaps_ = 0;
};

/// Adapts a Controller to the EpisodeController concept.
struct ControllerRef {
  Controller& c;
  Action act(const Observation& obs) { return c.act(obs); }
  void on_sample(const Assignment& s) { c.on_sample(s); }
};

struct ControllerSpec {
  enum class Kind { Noop, Random, Greedy, TabularQ };
  Kind kind = Kind::Noop;
  bool shielded = false;
  TabularQParams q;

  std::string str() const {
    std::string base = kind == Kind::Noop     ? "noop"
                       : kind == Kind::Random ? "random"
                       : kind == Kind::Greedy ? "greedy"
                                              : "tabular_q";
    return shielded ? "shielded:" + base : base;
  }
};

inline ControllerSpec parse_controller(const std::string& text) {
  ControllerSpec spec;
  std::string name = text;
  if (name.rfind("shielded:", 0) == 0) {
    spec.shielded = true;
    name = name.substr(9);
  }
  if (name == "noop")
    spec.kind = ControllerSpec::Kind::Noop;
  else if (name == "random")
    spec.kind = ControllerSpec::Kind::Random;
  else if (name == "greedy")
    spec.kind = ControllerSpec::Kind::Greedy;
  else if (name == "tabular_q")
    spec.kind = ControllerSpec::Kind::TabularQ;
  else
    throw Error(ErrorCode::Domain, "unknown controller '" + text + "'");
  return spec;
}

/// Builds a fresh controller for one episode. `monitor` is required for
/// shielded controllers; `q_table` seeds TabularQ (see train_tabular_q).
inline std::unique_ptr<Controller> make_controller(const ControllerSpec& cs, const GridSpec& grid, std::uint64_t seed,
                                                   const std::optional<Monitor>& monitor = std::nullopt,
                                                   const TabularQController::Table& q_table = {}) {
  std::unique_ptr<Controller> base;
  switch (cs.kind) {
    case ControllerSpec::Kind::Noop: base = std::make_unique<NoopController>(); break;
    case ControllerSpec::Kind::Random: base = std::make_unique<RandomController>(grid, seed); break;
    case ControllerSpec::Kind::Greedy: base = std::make_unique<GreedyController>(grid); break;
    case ControllerSpec::Kind::TabularQ:
      base = std::make_unique<TabularQController>(grid, cs.q, seed, q_table);
      break;
  }
  if (!cs.shielded) return base;
  if (!monitor) throw Error(ErrorCode::Domain, "a shielded controller needs a monitor");
  return std::make_unique<ShieldedController>(grid, std::move(base), *monitor);
}

/// Desk-scale training: `params.episodes` sequential episodes sharing one table.
inline TabularQController::Table train_tabular_q(const GridSpec& grid, const TabularQParams& params,
                                                 const Duration& horizon, const Duration& delta, const Duration& tick,
                                                 std::uint64_t seed) {
  TabularQController learner(grid, params, derive_seed(seed, 0));
  for (std::size_t e = 0; e < params.episodes; ++e) {
    ControllerRef ref{learner};
    run_episode(grid, ref, horizon, delta, tick, derive_seed(seed, e + 1));
    learner.end_episode();
  }
  return learner.table();
}

}  // namespace sampleguard
