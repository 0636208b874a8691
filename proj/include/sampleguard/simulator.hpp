#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sampleguard/grid.hpp"
#include "sampleguard/random.hpp"
#include "sampleguard/trace.hpp"

namespace sampleguard {

/// Topology-changing control command.
struct Action {
  enum class Kind { Noop, SetLine };
  Kind kind = Kind::Noop;
  std::uint32_t line = 0;
  bool in_service = true;

  static Action noop() { return {}; }
  static Action set_line(std::uint32_t id, bool on) { return {Kind::SetLine, id, on}; }

  std::string str() const {
    if (kind == Kind::Noop) return "noop";
    return "set_line(" + std::to_string(line) + "," + (in_service ? "on" : "off") + ")";
  }

  friend bool operator==(const Action& a, const Action& b) {
    if (a.kind != b.kind) return false;
    return a.kind == Kind::Noop || (a.line == b.line && a.in_service == b.in_service);
  }
};

/// Electrical and protection state; vectors are indexed like the spec's
/// `nodes` and `lines`.
struct GridState {
  Duration time;
  std::vector<bool> line_in_service;
  /// Current profile values: generation positive, demand negative.
  std::vector<double> injections_mw;
  /// Dispatched injections after island balancing and outages.
  std::vector<double> served_mw;
  std::vector<double> flows_mw;
  std::vector<double> load_ratio;
  std::vector<Duration> overload_elapsed;
  std::vector<bool> blackout;
  std::vector<Duration> outage_clock;

  friend bool operator==(const GridState&, const GridState&) = default;
};

/// Controllers see the full state at sampling instants, read only.
using Observation = GridState;

struct GridEvent {
  enum class Kind { Trip, BlackoutStart, BlackoutEnd };
  Kind kind;
  Duration time;
  std::uint32_t id;  // line id for Trip, node id otherwise

  friend bool operator==(const GridEvent&, const GridEvent&) = default;
};

inline bool is_overloaded(const GridState& s, std::size_t line) {
  return s.line_in_service[line] && s.load_ratio[line] >= 1.0;
}

/// Proposition values of a state: `oload_<line>` and `blackout_<consumer>`.
inline Assignment atoms_of(const GridSpec& spec, const GridState& s) {
  Assignment a;
  for (std::size_t l = 0; l < spec.lines.size(); ++l) a[overload_atom_name(spec.lines[l].id)] = is_overloaded(s, l);
  for (std::size_t i = 0; i < spec.nodes.size(); ++i)
    if (spec.nodes[i].kind == NodeKind::Consumer) a[blackout_atom_name(spec.nodes[i].id)] = s.blackout[i];
  return a;
}

inline double max_load_ratio(const GridState& s) {
  double m = 0.0;
  for (std::size_t l = 0; l < s.load_ratio.size(); ++l)
    if (s.line_in_service[l]) m = std::max(m, s.load_ratio[l]);
  return m;
}

namespace detail {

// Island balancing, blackout bookkeeping and flow solution for the current
// injections and topology. Does not advance any clock.
inline void dispatch(const GridSpec& spec, GridState& s, std::vector<GridEvent>* events) {
  auto label = island_labels(spec, s.line_in_service);
  std::size_t n_islands = *std::max_element(label.begin(), label.end()) + 1;
  std::vector<double> generation(n_islands, 0.0);
  for (std::size_t i = 0; i < spec.nodes.size(); ++i)
    if (spec.nodes[i].kind == NodeKind::Generator) generation[label[i]] += std::max(0.0, s.injections_mw[i]);

  for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
    if (spec.nodes[i].kind != NodeKind::Consumer) continue;
    bool supplied = generation[label[i]] > 0.0;
    double demand = -s.injections_mw[i];
    if (s.blackout[i]) {
      if (s.outage_clock[i] >= spec.gamma_recovery && supplied) {
        s.blackout[i] = false;
        s.outage_clock[i] = Duration(0);
        if (events) events->push_back({GridEvent::Kind::BlackoutEnd, s.time, spec.nodes[i].id});
      }
    } else if (demand > 0.0 && !supplied) {
      s.blackout[i] = true;
      s.outage_clock[i] = Duration(0);
      if (events) events->push_back({GridEvent::Kind::BlackoutStart, s.time, spec.nodes[i].id});
    }
  }

  std::vector<double> demand(n_islands, 0.0);
  for (std::size_t i = 0; i < spec.nodes.size(); ++i)
    if (spec.nodes[i].kind == NodeKind::Consumer && !s.blackout[i]) demand[label[i]] += std::max(0.0, -s.injections_mw[i]);

  // Surplus generation is scaled down to demand; a deficit sheds every
  // consumer of the island proportionally.
  for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
    std::size_t k = label[i];
    double g = generation[k], d = demand[k];
    if (spec.nodes[i].kind == NodeKind::Generator) {
      double out = std::max(0.0, s.injections_mw[i]);
      s.served_mw[i] = g > 0.0 && g >= d ? out * (d / g) : out;
    } else if (s.blackout[i] || g <= 0.0) {
      s.served_mw[i] = 0.0;
    } else {
      double want = std::max(0.0, -s.injections_mw[i]);
      s.served_mw[i] = -(g >= d ? want : want * (g / d));
    }
  }

  s.flows_mw = flow_solve(spec, s.line_in_service, s.served_mw);
  for (std::size_t l = 0; l < spec.lines.size(); ++l)
    s.load_ratio[l] = s.line_in_service[l] ? std::abs(s.flows_mw[l]) / spec.lines[l].capacity_mw : 0.0;
}

inline void apply_action(const GridSpec& spec, GridState& s, const Action& action) {
  if (action.kind == Action::Kind::Noop) return;
  auto l = spec.line_index(action.line);
  if (!l) throw Error(ErrorCode::InvalidAction, "unknown line " + std::to_string(action.line));
  if (s.line_in_service[*l] != action.in_service) s.overload_elapsed[*l] = Duration(0);
  s.line_in_service[*l] = action.in_service;
}

inline void jitter(const GridSpec& spec, GridState& s, const Duration& tick, Rng& rng) {
  double tick_min = tick.to_double();
  for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
    const auto& prof = spec.nodes[i].profile;
    double u = rng.uniform();
    double step = (2.0 * u - 1.0) * prof.jitter_mw;
    double cap = prof.ramp_mw_per_min * tick_min;
    step = std::clamp(step, -cap, cap);
    double magnitude = std::clamp(std::abs(s.injections_mw[i]) + step, 0.0, 2.0 * prof.base_mw);
    s.injections_mw[i] = spec.nodes[i].kind == NodeKind::Generator ? magnitude : -magnitude;
  }
}

}  // namespace detail

/// State at t = 0: every line in service, every profile at its base value.
inline GridState initial_state(const GridSpec& spec) {
  GridState s;
  s.line_in_service.assign(spec.lines.size(), true);
  s.injections_mw.resize(spec.nodes.size());
  for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
    double b = spec.nodes[i].profile.base_mw;
    s.injections_mw[i] = spec.nodes[i].kind == NodeKind::Generator ? b : -b;
  }
  s.served_mw.assign(spec.nodes.size(), 0.0);
  s.flows_mw.assign(spec.lines.size(), 0.0);
  s.load_ratio.assign(spec.lines.size(), 0.0);
  s.overload_elapsed.assign(spec.lines.size(), Duration(0));
  s.blackout.assign(spec.nodes.size(), false);
  s.outage_clock.assign(spec.nodes.size(), Duration(0));
  detail::dispatch(spec, s, nullptr);
  return s;
}

/// The state the next sample will show if `action` is applied now. Exact:
/// the first inner tick after an action does not perturb injections.
inline GridState predict_after(const GridSpec& spec, const GridState& s, const Action& action) {
  GridState next = s;
  detail::apply_action(spec, next, action);
  detail::dispatch(spec, next, nullptr);
  return next;
}

struct StepResult {
  std::vector<DenseTrace::Segment> segments;
  GridState state;
  std::vector<GridEvent> events;
};

/// Optional per-tick callback, invoked after each inner tick has been solved.
using TickObserver = std::function<void(const GridState&)>;

/// Advances one control period of length `delta` in inner ticks of length
/// `tick`: the action is applied at the period start, then each tick jitters
/// profiles (except the first), re-dispatches, emits one segment and runs
/// the protection relays.
inline StepResult step_dense(const GridSpec& spec, GridState state, const Action& action, const Duration& delta,
                             const Duration& tick, Rng& rng, const TickObserver& observer = {}) {
  if (!tick.is_positive() || !delta.is_positive() || !delta.is_multiple_of(tick))
    throw Error(ErrorCode::ResolutionMismatch, "period " + delta.str() + " is not a multiple of tick " + tick.str());
  detail::apply_action(spec, state, action);
  StepResult out;
  std::int64_t ticks = delta.floor_div(tick);
  for (std::int64_t k = 0; k < ticks; ++k) {
    if (k > 0) detail::jitter(spec, state, tick, rng);
    detail::dispatch(spec, state, &out.events);
    for (std::size_t l = 0; l < spec.lines.size(); ++l)
      state.overload_elapsed[l] = is_overloaded(state, l) ? state.overload_elapsed[l] + tick : Duration(0);
    if (observer) observer(state);
    out.segments.push_back({state.time, atoms_of(spec, state)});

    for (std::size_t l = 0; l < spec.lines.size(); ++l) {
      if (state.line_in_service[l] && state.overload_elapsed[l] >= spec.tau_trip) {
        state.line_in_service[l] = false;
        state.overload_elapsed[l] = Duration(0);
        out.events.push_back({GridEvent::Kind::Trip, state.time + tick, spec.lines[l].id});
      }
    }
    for (std::size_t i = 0; i < spec.nodes.size(); ++i)
      if (state.blackout[i]) state.outage_clock[i] += tick;
    state.time += tick;
  }
  out.state = std::move(state);
  return out;
}

/// Anything that can drive an episode.
template <typename C>
concept EpisodeController = requires(C c, const Observation& obs, const Assignment& sample) {
  { c.act(obs) } -> std::convertible_to<Action>;
  c.on_sample(sample);
};

struct EpisodeRecord {
  DenseTrace dense;
  SampledTrace sampled;
  struct TimedAction {
    Duration time;
    Action action;
    friend bool operator==(const TimedAction&, const TimedAction&) = default;
  };
  std::vector<TimedAction> actions;
  std::vector<GridEvent> events;

  friend bool operator==(const EpisodeRecord&, const EpisodeRecord&) = default;
};

/// Closed-loop run over [0, horizon]: at every t = beta * delta the controller
/// observes the state and acts, then one control period is simulated.
/// `horizon` must already include any padding the properties need.
template <EpisodeController C>
EpisodeRecord run_episode(const GridSpec& spec, C& controller, const Duration& horizon, const Duration& delta,
                          const Duration& tick, std::uint64_t seed, const TickObserver& observer = {}) {
  if (!horizon.is_positive() || !horizon.is_multiple_of(delta))
    throw Error(ErrorCode::Domain, "horizon " + horizon.str() + " must be a positive multiple of " + delta.str());
  Rng rng(seed);
  EpisodeRecord rec;
  rec.dense.resolution = tick;
  rec.dense.horizon = horizon;
  GridState state = initial_state(spec);
  std::int64_t periods = horizon.floor_div(delta);
  for (std::int64_t beta = 0; beta < periods; ++beta) {
    Action a = controller.act(state);
    rec.actions.push_back({state.time, a});
    StepResult step = step_dense(spec, std::move(state), a, delta, tick, rng, observer);
    controller.on_sample(step.segments.front().atoms);
    for (auto& seg : step.segments) rec.dense.segments.push_back(std::move(seg));
    for (auto& e : step.events) rec.events.push_back(e);
    state = std::move(step.state);
  }
  rec.sampled = sample_dense(rec.dense, delta);
  return rec;
}

}  // namespace sampleguard
