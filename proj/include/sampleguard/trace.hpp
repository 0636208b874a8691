#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sampleguard/duration.hpp"
#include "sampleguard/error.hpp"

namespace sampleguard {

/// Truth values of atomic propositions at one instant.
using Assignment = std::map<std::string, bool>;

/// Piecewise-constant signal on [0, horizon]. Segment k holds on
/// [start_k, start_{k+1}); the last segment holds on [start_last, horizon],
/// closed on the right so that the instant `horizon` itself has a value.
struct DenseTrace {
  struct Segment {
    Duration start;
    Assignment atoms;
    friend bool operator==(const Segment&, const Segment&) = default;
  };

  Duration resolution;  // inner step; every change point is a multiple of it
  Duration horizon;
  std::vector<Segment> segments;

  friend bool operator==(const DenseTrace&, const DenseTrace&) = default;

  /// Throws InvalidTrace when an invariant is broken.
  void validate() const {
    auto bad = [](const std::string& why) { return Error(ErrorCode::InvalidTrace, why); };
    if (!resolution.is_positive()) throw bad("resolution must be positive");
    if (segments.empty()) throw bad("trace has no segments");
    if (!segments.front().start.is_zero()) throw bad("first segment must start at 0");
    const auto& keys = segments.front().atoms;
    for (std::size_t i = 0; i < segments.size(); ++i) {
      const auto& seg = segments[i];
      if (!seg.start.is_multiple_of(resolution))
        throw bad("segment start " + seg.start.str() + " is not on the " + resolution.str() + " grid");
      if (i > 0 && !(segments[i - 1].start < seg.start)) throw bad("segment starts must be strictly increasing");
      if (horizon < seg.start) throw bad("segment start " + seg.start.str() + " beyond horizon " + horizon.str());
      if (seg.atoms.size() != keys.size() ||
          !std::equal(seg.atoms.begin(), seg.atoms.end(), keys.begin(),
                      [](const auto& a, const auto& b) { return a.first == b.first; }))
        throw bad("segment at " + seg.start.str() + " does not assign the same atoms as the first segment");
    }
  }

  /// Index of the segment whose value holds at time t (0 <= t <= horizon).
  std::size_t segment_at(const Duration& t) const {
    auto it = std::upper_bound(segments.begin(), segments.end(), t,
                               [](const Duration& x, const Segment& s) { return x < s.start; });
    return static_cast<std::size_t>(std::distance(segments.begin(), it)) - 1;
  }

  /// End of segment k: the next start, or the horizon for the last one.
  Duration segment_end(std::size_t k) const {
    return k + 1 < segments.size() ? segments[k + 1].start : horizon;
  }
};

/// Values at t = beta * delta for beta = 0, 1, ...
struct SampledTrace {
  Duration delta;
  std::vector<Assignment> samples;

  friend bool operator==(const SampledTrace&, const SampledTrace&) = default;
};

struct Verdict {
  enum class Outcome { Sat, Violated };
  Outcome outcome = Outcome::Sat;
  /// Dense verdicts: earliest witness time.
  std::optional<Duration> time;
  /// Sampled verdicts: earliest witness sample (for monitors, the confirming sample).
  std::optional<std::size_t> index;
  /// Monitors only: first sample of the violated window (index - (m - 1)).
  std::optional<std::size_t> window_start;

  bool sat() const { return outcome == Outcome::Sat; }
  bool violated() const { return outcome == Outcome::Violated; }

  static Verdict satisfied() { return {}; }
  static Verdict violated_at_time(Duration t) { return {Outcome::Violated, t, std::nullopt, std::nullopt}; }
  static Verdict violated_at_index(std::size_t i) { return {Outcome::Violated, std::nullopt, i, std::nullopt}; }

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

/// Restriction of `dense` to the instants beta * delta, beta = 0..floor(T / delta).
inline SampledTrace sample_dense(const DenseTrace& dense, const Duration& delta) {
  if (!delta.is_positive()) throw Error(ErrorCode::Domain, "sampling period must be positive");
  if (!delta.is_multiple_of(dense.resolution))
    throw Error(ErrorCode::ResolutionMismatch,
                "sampling period " + delta.str() + " is not a multiple of resolution " + dense.resolution.str());
  dense.validate();
  SampledTrace out{delta, {}};
  std::int64_t count = dense.horizon.floor_div(delta) + 1;
  out.samples.reserve(static_cast<std::size_t>(count));
  std::size_t seg = 0;
  for (std::int64_t beta = 0; beta < count; ++beta) {
    Duration t = delta * beta;
    while (seg + 1 < dense.segments.size() && dense.segments[seg + 1].start <= t) ++seg;
    out.samples.push_back(dense.segments[seg].atoms);
  }
  return out;
}

}  // namespace sampleguard
