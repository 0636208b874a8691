#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "flow_oracle.hpp"
#include "grid_fixtures.hpp"
#include "sampleguard/control.hpp"
#include "sampleguard/simulator.hpp"

using namespace sampleguard;
using sampleguard::testing::consumer;
using sampleguard::testing::data_path;
using sampleguard::testing::generator;
using sampleguard::testing::ScriptedController;

namespace {

using sampleguard::testing::as_double;
using sampleguard::testing::Exact;
using sampleguard::testing::exact_flows;

void expect_rel(double got, double want, double tol = 1e-9) {
  EXPECT_LE(std::abs(got - want), tol * std::max(1.0, std::abs(want))) << got << " vs " << want;
}

/// Largest node-balance residual relative to the largest injection.
double balance_residual(const GridSpec& g, const GridState& s) {
  std::vector<double> net(g.nodes.size(), 0.0);
  for (std::size_t l = 0; l < g.lines.size(); ++l) {
    if (!s.line_in_service[l]) continue;
    net[*g.node_index(g.lines[l].from)] += s.flows_mw[l];
    net[*g.node_index(g.lines[l].to)] -= s.flows_mw[l];
  }
  double scale = 1.0, worst = 0.0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) scale = std::max(scale, std::abs(s.served_mw[i]));
  for (std::size_t i = 0; i < g.nodes.size(); ++i) worst = std::max(worst, std::abs(net[i] - s.served_mw[i]));
  return worst / scale;
}

EpisodeRecord run_with(const GridSpec& g, Controller& c, std::int64_t horizon, std::uint64_t seed,
                       const TickObserver& obs = {}) {
  ControllerRef ref{c};
  return run_episode(g, ref, Duration(horizon), Duration(5), Duration(1), seed, obs);
}

}  // namespace

TEST(FlowSolve, SingleLineCarriesEverything) {
  auto g = sampleguard::testing::two_node(10, 8, 1);
  auto s = initial_state(g);
  expect_rel(s.flows_mw[0], 10.0);
  expect_rel(s.load_ratio[0], 1.25);
  EXPECT_TRUE(is_overloaded(s, 0));
}

TEST(FlowSolve, ParallelLinesSplitEvenly) {
  auto g = sampleguard::testing::two_node(10, 8, 2);
  auto s = initial_state(g);
  expect_rel(s.flows_mw[0], 5.0);
  expect_rel(s.flows_mw[1], 5.0);
  expect_rel(s.load_ratio[0], 0.625);
}

TEST(FlowSolve, TriangleMatchesExactOracle) {
  GridSpec g;
  g.nodes = {generator(1, 9), consumer(2, 0), consumer(3, 9)};
  g.lines = {{0, 1, 2, 1.0, 100}, {1, 2, 3, 1.0, 100}, {2, 1, 3, 1.0, 100}};
  g.slack = 1;
  g.validate();
  auto oracle = exact_flows(3, {{0, 1, 1}, {1, 2, 1}, {0, 2, 1}}, {9, 0, -9});
  EXPECT_EQ(oracle[2], Exact(6));
  EXPECT_EQ(oracle[0], Exact(3));
  auto flows = flow_solve(g, {true, true, true}, {9, 0, -9});
  for (std::size_t l = 0; l < 3; ++l) expect_rel(flows[l], as_double(oracle[l]));
}

TEST(FlowSolve, RandomConnectedGridsMatchExactOracle) {
  std::mt19937_64 rng(31);
  for (int n_case = 0; n_case < 200; ++n_case) {
    std::size_t n = 2 + rng() % 7;
    std::vector<std::array<long long, 3>> lines;
    for (std::size_t v = 1; v < n; ++v) lines.push_back({static_cast<long long>(rng() % v), static_cast<long long>(v), 1 + static_cast<long long>(rng() % 10)});
    for (int extra = static_cast<int>(rng() % 4); extra > 0; --extra) {
      long long u = rng() % n, v = rng() % n;
      if (u != v) lines.push_back({u, v, 1 + static_cast<long long>(rng() % 10)});
    }
    std::vector<long long> inj(n, 0);
    long long total = 0;
    for (std::size_t i = 1; i < n; ++i) {
      inj[i] = -static_cast<long long>(rng() % 50);
      total -= inj[i];
    }
    inj[0] = total;
    GridSpec g;
    g.nodes.push_back(generator(0, double(total)));
    for (std::size_t i = 1; i < n; ++i) g.nodes.push_back(consumer(static_cast<std::uint32_t>(i), double(-inj[i])));
    for (std::size_t l = 0; l < lines.size(); ++l)
      g.lines.push_back({static_cast<std::uint32_t>(l), static_cast<std::uint32_t>(lines[l][0]),
                         static_cast<std::uint32_t>(lines[l][1]), double(lines[l][2]), 1000});
    auto oracle = exact_flows(n, lines, inj);
    std::vector<double> injd(inj.begin(), inj.end());
    auto flows = flow_solve(g, std::vector<bool>(lines.size(), true), injd);
    for (std::size_t l = 0; l < lines.size(); ++l) expect_rel(flows[l], as_double(oracle[l]));
  }
}

TEST(FlowSolve, IslandWithoutGeneratorCarriesNothing) {
  GridSpec g;
  g.nodes = {generator(0, 10), consumer(1, 4), consumer(2, 3), consumer(3, 3)};
  g.lines = {{0, 0, 1, 1.0, 50}, {1, 1, 2, 1.0, 50}, {2, 2, 3, 1.0, 50}};
  auto flows = flow_solve(g, {true, false, true}, {10, -4, -3, -3});
  EXPECT_EQ(flows[2], 0.0);
  EXPECT_EQ(flows[1], 0.0);
}

TEST(FlowSolve, RejectsWrongSizes) {
  auto g = sampleguard::testing::two_node(10, 8, 1);
  EXPECT_THROW(flow_solve(g, {true, true}, {10, -10}), Error);
}

TEST(GridFile, FixtureLoadsAndRoundTrips) {
  auto g = load_grid(data_path("fixture_grid.json"));
  EXPECT_EQ(g.nodes.size(), 5u);
  EXPECT_EQ(g.lines.size(), 6u);
  EXPECT_EQ(g.gamma_recovery, Duration(30));
  auto again = grid_from_json(to_json(g));
  EXPECT_EQ(to_json(again), to_json(g));
}

TEST(GridFile, InvalidGridsAreRejected) {
  auto j = to_json(load_grid(data_path("fixture_grid.json")));
  auto expect_invalid = [](const nlohmann::json& bad) {
    try {
      grid_from_json(bad);
      ADD_FAILURE() << bad.dump();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidGrid);
    }
  };
  auto dup = j;
  dup["nodes"][1]["id"] = 0;
  expect_invalid(dup);
  auto dangling = j;
  dangling["lines"][0]["to"] = 99;
  expect_invalid(dangling);
  auto no_gen = j;
  no_gen["nodes"][0]["kind"] = "consumer";
  no_gen["nodes"][1]["kind"] = "consumer";
  expect_invalid(no_gen);
  auto zero_gamma = j;
  zero_gamma["gamma_recovery_min"] = 0;
  expect_invalid(zero_gamma);
  auto slack = j;
  slack["slack"] = 3;
  expect_invalid(slack);
  auto missing = j;
  missing.erase("lines");
  expect_invalid(missing);
}

TEST(Simulator, NoopSteadyStateOnTheFixture) {
  auto g = load_grid(data_path("fixture_grid.json"));
  auto s = initial_state(g);
  for (std::size_t l = 0; l < g.lines.size(); ++l) EXPECT_LT(s.load_ratio[l], 1.0);
  for (bool b : s.blackout) EXPECT_FALSE(b);
  EXPECT_LE(balance_residual(g, s), 1e-9);
  NoopController c;
  auto rec = run_with(g, c, 120, 5);
  for (const auto& seg : rec.dense.segments)
    for (const auto& [atom, v] : seg.atoms) EXPECT_FALSE(v) << atom << " at " << seg.start;
}

TEST(Simulator, BalanceHoldsAtEveryTick) {
  auto g = load_grid(data_path("fixture_grid.json"));
  double worst = 0.0;
  std::size_t ticks = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    RandomController c(g, seed);
    run_with(g, c, 60, seed, [&](const GridState& s) {
      worst = std::max(worst, balance_residual(g, s));
      ++ticks;
    });
  }
  EXPECT_EQ(ticks, 40u * 60u);
  EXPECT_LE(worst, 1e-9);
}

TEST(Simulator, DisconnectionBlacksOutForAtLeastGamma) {
  auto g = load_grid(data_path("fixture_grid.json"));
  // Consumer 4 hangs off lines 4 and 5; open both, reconnect right away.
  ScriptedController c({Action::set_line(4, false), Action::set_line(5, false), Action::set_line(5, true)});
  auto rec = run_with(g, c, 60, 1);
  std::vector<Duration> starts, ends;
  for (const auto& e : rec.events) {
    if (e.id != 4) continue;
    if (e.kind == GridEvent::Kind::BlackoutStart) starts.push_back(e.time);
    if (e.kind == GridEvent::Kind::BlackoutEnd) ends.push_back(e.time);
  }
  ASSERT_EQ(starts, std::vector<Duration>{Duration(5)});
  ASSERT_EQ(ends.size(), 1u);
  EXPECT_EQ(ends[0], Duration(35));
  EXPECT_TRUE(rec.dense.segments[rec.dense.segment_at(Duration(5))].atoms.at("blackout_4"));
  EXPECT_TRUE(rec.dense.segments[rec.dense.segment_at(Duration(34))].atoms.at("blackout_4"));
  EXPECT_FALSE(rec.dense.segments[rec.dense.segment_at(Duration(35))].atoms.at("blackout_4"));
}

TEST(Simulator, OpeningEveryLineBlacksOutEveryConsumer) {
  auto g = load_grid(data_path("fixture_grid.json"));
  class OpenAll final : public Controller {
   public:
    Action act(const Observation& obs) override {
      for (std::size_t l = 0; l < obs.line_in_service.size(); ++l)
        if (obs.time >= Duration(5) && obs.line_in_service[l]) return Action::set_line(static_cast<std::uint32_t>(l), false);
      return Action::noop();
    }
  } c;
  auto rec = run_with(g, c, 60, 3);
  const auto& last = rec.sampled.samples.back();
  for (const char* a : {"blackout_2", "blackout_3", "blackout_4"}) EXPECT_TRUE(last.at(a)) << a;
}

TEST(Simulator, RelayTripRegression) {
  // Stress grid, seed 42: with line 1 open, line 0 and line 2 run above
  // capacity until the relays trip them; the consumers are then cut off.
  auto g = load_grid(data_path("stress_grid.json"));
  ScriptedController c({Action::set_line(1, false)});
  auto rec = run_with(g, c, 60, 42);
  std::vector<GridEvent> expected = {
      {GridEvent::Kind::Trip, Duration(15), 0},          {GridEvent::Kind::Trip, Duration(15), 2},
      {GridEvent::Kind::BlackoutStart, Duration(15), 2}, {GridEvent::Kind::BlackoutStart, Duration(15), 3},
      {GridEvent::Kind::BlackoutStart, Duration(15), 4},
  };
  EXPECT_EQ(rec.events, expected);
}

TEST(Simulator, RelayBoundAndElapsedReset) {
  auto g = load_grid(data_path("stress_grid.json"));
  Duration worst(0);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    RandomController c(g, seed);
    run_with(g, c, 120, seed, [&](const GridState& s) {
      for (std::size_t l = 0; l < g.lines.size(); ++l) {
        if (!s.line_in_service[l] || !is_overloaded(s, l)) {
          EXPECT_TRUE(s.overload_elapsed[l].is_zero());
        }
        if (s.line_in_service[l]) worst = std::max(worst, s.overload_elapsed[l]);
      }
    });
  }
  EXPECT_LE(worst, g.tau_trip + Duration(1));
}

TEST(Simulator, DeterministicGivenSeed) {
  auto g = load_grid(data_path("stress_grid.json"));
  RandomController a(g, 9), b(g, 9), c(g, 10);
  auto ra = run_with(g, a, 120, 9);
  auto rb = run_with(g, b, 120, 9);
  auto rc = run_with(g, c, 120, 10);
  EXPECT_EQ(ra, rb);
  EXPECT_NE(ra, rc);
}

TEST(Simulator, SamplesMatchDenseTraceAndPeriods) {
  auto g = load_grid(data_path("fixture_grid.json"));
  RandomController c(g, 4);
  auto rec = run_with(g, c, 60, 4);
  rec.dense.validate();
  EXPECT_EQ(rec.dense.segments.size(), 60u);
  EXPECT_EQ(rec.sampled, sample_dense(rec.dense, Duration(5)));
  EXPECT_EQ(rec.sampled.samples.size(), 13u);
  ASSERT_EQ(rec.actions.size(), 12u);
  for (std::size_t b = 0; b < rec.actions.size(); ++b) EXPECT_EQ(rec.actions[b].time, Duration(5 * static_cast<std::int64_t>(b)));
}

TEST(Simulator, FirstSampleAfterAnActionIsPredictedExactly) {
  auto g = load_grid(data_path("stress_grid.json"));
  Rng rng(5);
  auto s = initial_state(g);
  for (int k = 0; k < 6; ++k) s = step_dense(g, s, Action::noop(), Duration(5), Duration(1), rng).state;
  auto action = Action::set_line(3, false);
  auto predicted = atoms_of(g, predict_after(g, s, action));
  auto step = step_dense(g, s, action, Duration(5), Duration(1), rng);
  EXPECT_EQ(step.segments.front().atoms, predicted);
}

TEST(Simulator, RejectsUnknownLinesAndBadPeriods) {
  auto g = load_grid(data_path("fixture_grid.json"));
  Rng rng(1);
  try {
    step_dense(g, initial_state(g), Action::set_line(77, false), Duration(5), Duration(1), rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidAction);
  }
  EXPECT_THROW(step_dense(g, initial_state(g), Action::noop(), Duration(5), Duration(2), rng), Error);
  NoopController c;
  ControllerRef ref{c};
  EXPECT_THROW(run_episode(g, ref, Duration(62), Duration(5), Duration(1), 0), Error);
}

TEST(Random, DerivedSeedsAreStable) {
  EXPECT_EQ(derive_seed(0, 0), derive_seed(0, 0));
  EXPECT_NE(derive_seed(0, 0), derive_seed(0, 1));
  EXPECT_NE(derive_seed(0, 1), derive_seed(1, 0));
  Rng a(3), b(3);
  for (int i = 0; i < 100; ++i) {
    double u = a.uniform();
    EXPECT_EQ(u, b.uniform());
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(a.below(7), 7u);
    b.below(7);
  }
}
