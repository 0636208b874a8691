#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sampleguard/formula.hpp"
#include "sampleguard/semantics.hpp"
#include "sampleguard/syntax.hpp"
#include "sampleguard/trace.hpp"

namespace sampleguard {

/// `G (p -> q | X q | ... | X^(m-1) q)`: every p-sample must see q within m samples.
struct DwellCounter {
  Literal trigger;
  Literal response;
  std::size_t m = 1;
  /// q == !p: the state collapses to the length of the current p-run.
  bool counter_form = false;
};

/// `G l`
struct InvariantCheck {
  Literal literal;
};

using MonitorComponent = std::variant<DwellCounter, InvariantCheck>;

/// Compiled, immutable monitor. A product of several components when the
/// source formula is a conjunction.
class Monitor {
 public:
  enum class Kind { DwellCounter, Invariant, Product };

  explicit Monitor(std::vector<MonitorComponent> components) : components_(std::move(components)) {
    if (components_.empty()) throw Error(ErrorCode::Domain, "monitor needs at least one component");
    for (const auto& c : components_)
      if (auto* d = std::get_if<DwellCounter>(&c); d && d->m == 0) throw Error(ErrorCode::Domain, "horizon m must be >= 1");
  }

  Kind kind() const {
    if (components_.size() > 1) return Kind::Product;
    return std::holds_alternative<DwellCounter>(components_.front()) ? Kind::DwellCounter : Kind::Invariant;
  }

  const std::vector<MonitorComponent>& components() const { return components_; }

  std::string description() const {
    std::string out;
    for (const auto& c : components_) {
      if (!out.empty()) out += " x ";
      if (auto* d = std::get_if<DwellCounter>(&c)) {
        out += std::string(d->counter_form ? "counter(" : "window(") + literal_text(d->trigger) + ", " +
               literal_text(d->response) + ", m=" + std::to_string(d->m) + ")";
      } else {
        out += "invariant(" + literal_text(std::get<InvariantCheck>(c).literal) + ")";
      }
    }
    return out;
  }

 private:
  static std::string literal_text(const Literal& l) { return (l.positive ? "" : "!") + l.atom.name; }

  std::vector<MonitorComponent> components_;
};

/// Per-episode execution state; its size depends only on the monitor.
struct MonitorState {
  enum class Status { Alive, Violated };

  struct Component {
    /// Counter form: length of the current trigger run.
    std::size_t counter = 0;
    /// Window form: ring buffer of the last m samples, bit 0 = trigger, bit 1 = response.
    std::vector<std::uint8_t> window;
    std::size_t responses_in_window = 0;
  };

  Status status = Status::Alive;
  /// Number of samples consumed so far (the index of the next sample).
  std::size_t position = 0;
  std::optional<std::size_t> violated_at;
  std::optional<std::size_t> window_start;
  std::vector<Component> components;

  bool alive() const { return status == Status::Alive; }
};

inline MonitorState initial_state(const Monitor& monitor) {
  MonitorState s;
  for (const auto& c : monitor.components()) {
    MonitorState::Component st;
    if (auto* d = std::get_if<DwellCounter>(&c); d && !d->counter_form) st.window.assign(d->m, 0);
    s.components.push_back(std::move(st));
  }
  return s;
}

namespace detail {

inline std::optional<DwellCounter> as_dwell(const LtlFormula& body) {
  if (body.op() != Op::Implies) return std::nullopt;
  auto p = as_literal(body.lhs());
  if (!p) return std::nullopt;
  std::vector<LtlFormula> terms;
  flatten(body.rhs(), Op::Or, terms);
  std::optional<Literal> q;
  std::vector<bool> seen(terms.size(), false);
  for (const auto& t : terms) {
    auto d = as_next_literal(t);
    if (!d) return std::nullopt;
    if (q && !(*q == d->second)) return std::nullopt;
    q = d->second;
    if (d->first >= terms.size() || seen[d->first]) return std::nullopt;
    seen[d->first] = true;
  }
  // Offsets are exactly 0..m-1 by the pigeonhole argument above.
  bool negation = q->atom.name == p->atom.name && q->positive != p->positive;
  return DwellCounter{*p, *q, terms.size(), negation};
}

// Returns true when the component is violated by this sample; `lag` receives m - 1.
inline bool advance_component(const MonitorComponent& c, MonitorState::Component& st, std::size_t index,
                              const Assignment& sample, std::size_t& lag) {
  if (auto* inv = std::get_if<InvariantCheck>(&c)) {
    lag = 0;
    return !holds(inv->literal, sample);
  }
  const auto& d = std::get<DwellCounter>(c);
  lag = d.m - 1;
  bool p = holds(d.trigger, sample);
  if (d.counter_form) {
    st.counter = p ? st.counter + 1 : 0;
    return st.counter >= d.m;
  }
  bool q = holds(d.response, sample);
  std::size_t slot = index % d.m;
  if (index >= d.m && (st.window[slot] & 2)) --st.responses_in_window;
  st.window[slot] = static_cast<std::uint8_t>((p ? 1 : 0) | (q ? 2 : 0));
  if (q) ++st.responses_in_window;
  if (index + 1 < d.m) return false;
  std::size_t oldest = (index + 1) % d.m;
  return (st.window[oldest] & 1) && st.responses_in_window == 0;
}

}  // namespace detail

/// Compiles the output of `strengthen` (or anything of the same shape).
inline Monitor compile_monitor(const LtlFormula& phi) {
  std::vector<MonitorComponent> comps;
  for (const auto& c : conjuncts(phi)) {
    auto unsupported = [&] {
      return Error(ErrorCode::UnsupportedFragment, "no monitor for '" + format_formula(c) + "'");
    };
    if (c.op() != Op::Globally) throw unsupported();
    LtlFormula body = c.child();
    if (auto lits = detail::literals_of(body)) {
      for (const auto& l : *lits) comps.push_back(InvariantCheck{l});
    } else if (auto d = detail::as_dwell(body)) {
      comps.push_back(*d);
    } else {
      throw unsupported();
    }
  }
  return Monitor(std::move(comps));
}

/// In-place variant of monitor_step.
inline void advance(const Monitor& monitor, MonitorState& s, const Assignment& sample) {
  if (!s.alive()) return;
  std::size_t index = s.position++;
  const auto& comps = monitor.components();
  for (std::size_t k = 0; k < comps.size(); ++k) {
    std::size_t lag = 0;
    if (detail::advance_component(comps[k], s.components[k], index, sample, lag) && s.alive()) {
      s.status = MonitorState::Status::Violated;
      s.violated_at = index;
      s.window_start = index - lag;
    }
  }
}

/// Consumes one sample. Violation is reported at the sample that confirms it;
/// a violated state is absorbing.
inline MonitorState monitor_step(const Monitor& monitor, MonitorState s, const Assignment& sample) {
  advance(monitor, s, sample);
  return s;
}

inline Verdict monitor_run(const Monitor& monitor, const SampledTrace& trace) {
  MonitorState s = initial_state(monitor);
  for (const auto& sample : trace.samples) {
    advance(monitor, s, sample);
    if (!s.alive()) break;
  }
  if (s.alive()) return Verdict::satisfied();
  Verdict v = Verdict::violated_at_index(*s.violated_at);
  v.window_start = s.window_start;
  return v;
}

inline constexpr std::size_t kNeverViolates = std::numeric_limits<std::size_t>::max();

/// Fewest further samples after which the monitor can be violated, assuming
/// every future sample is as bad as possible. Zero once violated.
inline std::size_t distance_to_violation(const Monitor& monitor, const MonitorState& s) {
  if (!s.alive()) return 0;
  std::size_t best = kNeverViolates;
  const auto& comps = monitor.components();
  for (std::size_t k = 0; k < comps.size(); ++k) {
    std::size_t dist = 1;
    if (auto* d = std::get_if<DwellCounter>(&comps[k])) {
      const auto& st = s.components[k];
      if (d->counter_form) {
        dist = d->m - st.counter;
      } else {
        dist = d->m;
        // Oldest trigger with no response after it in the retained window.
        std::size_t filled = std::min(s.position, d->m);
        for (std::size_t back = filled; back >= 1; --back) {
          std::size_t idx = s.position - back;
          std::uint8_t cell = st.window[idx % d->m];
          if (cell & 2) {
            continue;
          }
          bool later_response = false;
          for (std::size_t after = idx + 1; after < s.position; ++after)
            if (st.window[after % d->m] & 2) later_response = true;
          if ((cell & 1) && !later_response) {
            dist = idx + d->m - s.position;
            break;
          }
        }
      }
    }
    best = std::min(best, dist);
  }
  return best;
}

}  // namespace sampleguard
