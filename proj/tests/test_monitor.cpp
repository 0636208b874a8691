#include <gtest/gtest.h>

#include "corpus.hpp"
#include "monitor_check.hpp"
#include "sampleguard/monitor.hpp"
#include "sampleguard/strengthen.hpp"
#include "sampleguard/syntax.hpp"
#include "trace_builders.hpp"

using namespace sampleguard;
using sampleguard::testing::sampled_from;

namespace {

Assignment overload(bool v) { return {{"oload_1", v}}; }

Monitor strengthened_monitor(const std::string& mtl, const Duration& delta) {
  return compile_monitor(strengthen(parse_mtl(mtl), delta).ltl);
}

}  // namespace

TEST(Compile, CounterFormForSelfNegation) {
  auto mon = strengthened_monitor("G (oload_1 -> F[0,10] !oload_1)", Duration(5));
  EXPECT_EQ(mon.kind(), Monitor::Kind::DwellCounter);
  const auto& d = std::get<DwellCounter>(mon.components().front());
  EXPECT_EQ(d.m, 2u);
  EXPECT_TRUE(d.counter_form);
  EXPECT_EQ(mon.description(), "counter(oload_1, !oload_1, m=2)");
}

TEST(Compile, WindowFormForOtherResponses) {
  auto mon = compile_monitor(parse_ltl("G (oload_1 -> oload_2 | X oload_2 | X^2 oload_2)"));
  EXPECT_EQ(mon.kind(), Monitor::Kind::DwellCounter);
  EXPECT_FALSE(std::get<DwellCounter>(mon.components().front()).counter_form);
  EXPECT_EQ(initial_state(mon).components.front().window.size(), 3u);
}

TEST(Compile, InvariantsAndProducts) {
  EXPECT_EQ(compile_monitor(parse_ltl("G (!blackout_1)")).kind(), Monitor::Kind::Invariant);
  auto p = compile_monitor(parse_ltl("G (!blackout_1 & !blackout_2)"));
  EXPECT_EQ(p.kind(), Monitor::Kind::Product);
  EXPECT_EQ(p.components().size(), 2u);
  auto q = compile_monitor(parse_ltl("G (!blackout_1) & G (oload_1 -> !oload_1 | X !oload_1)"));
  EXPECT_EQ(q.kind(), Monitor::Kind::Product);
  EXPECT_EQ(q.description(), "invariant(!blackout_1) x counter(oload_1, !oload_1, m=2)");
}

TEST(Compile, RejectsShapesOutsideTheFragment) {
  for (const char* text : {"G (oload_1 -> X oload_2)", "G (oload_1 -> oload_2 | X^2 oload_2)",
                           "G (oload_1 -> oload_2 | X oload_3)", "F oload_1", "G (oload_1 | oload_2)"}) {
    try {
      compile_monitor(parse_ltl(text));
      ADD_FAILURE() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::UnsupportedFragment) << text;
    }
  }
}

TEST(Step, CounterConfirmsAtTheLastSampleOfTheWindow) {
  auto mon = strengthened_monitor("G (oload_1 -> F[0,10] !oload_1)", Duration(5));
  auto s = initial_state(mon);
  s = monitor_step(mon, s, overload(true));
  EXPECT_TRUE(s.alive());
  EXPECT_EQ(s.components[0].counter, 1u);
  s = monitor_step(mon, s, overload(true));
  ASSERT_FALSE(s.alive());
  EXPECT_EQ(*s.violated_at, 1u);
  EXPECT_EQ(*s.window_start, 0u);
}

TEST(Step, ViolationIsAbsorbing) {
  auto mon = strengthened_monitor("G (oload_1 -> F[0,10] !oload_1)", Duration(5));
  auto s = initial_state(mon);
  for (bool v : {true, true, false, false, false}) s = monitor_step(mon, s, overload(v));
  EXPECT_FALSE(s.alive());
  EXPECT_EQ(*s.violated_at, 1u);
  EXPECT_EQ(distance_to_violation(mon, s), 0u);
}

TEST(Run, Examples) {
  auto mon = strengthened_monitor("G (oload_1 -> F[0,10] !oload_1)", Duration(5));
  auto v = monitor_run(mon, sampled_from(Duration(5), {{"oload_1", {true, true, false}}}));
  ASSERT_TRUE(v.violated());
  EXPECT_EQ(*v.index, 1u);
  EXPECT_EQ(*v.window_start, 0u);
  EXPECT_TRUE(monitor_run(mon, sampled_from(Duration(5), {{"oload_1", {true, false, true, false}}})).sat());
  EXPECT_TRUE(monitor_run(mon, SampledTrace{Duration(5), {}}).sat());

  auto inv = compile_monitor(parse_ltl("G (!blackout_2)"));
  auto vi = monitor_run(inv, sampled_from(Duration(5), {{"blackout_2", {false, false, false, false, true}}}));
  ASSERT_TRUE(vi.violated());
  EXPECT_EQ(*vi.index, 4u);
  EXPECT_EQ(*vi.window_start, 4u);
}

TEST(Run, UnknownAtom) {
  auto inv = compile_monitor(parse_ltl("G (!blackout_2)"));
  try {
    monitor_run(inv, sampled_from(Duration(5), {{"blackout_1", {false}}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownAtom);
  }
}

TEST(Distance, CounterInvariantAndProduct) {
  auto mon = strengthened_monitor("G (oload_1 -> F[0,20] !oload_1)", Duration(5));  // m = 4
  auto s = initial_state(mon);
  EXPECT_EQ(distance_to_violation(mon, s), 4u);
  s = monitor_step(mon, s, overload(true));
  s = monitor_step(mon, s, overload(true));
  EXPECT_EQ(distance_to_violation(mon, s), 2u);
  s = monitor_step(mon, s, overload(false));
  EXPECT_EQ(distance_to_violation(mon, s), 4u);

  auto inv = compile_monitor(parse_ltl("G (!blackout_1)"));
  EXPECT_EQ(distance_to_violation(inv, initial_state(inv)), 1u);

  auto prod = compile_monitor(parse_ltl("G (oload_1 -> !oload_1 | X !oload_1 | X^2 !oload_1) & G (!blackout_1)"));
  EXPECT_EQ(distance_to_violation(prod, initial_state(prod)), 1u);
}

TEST(Distance, WindowFormCountsFromOldestOpenTrigger) {
  auto mon = compile_monitor(parse_ltl("G (oload_1 -> oload_2 | X oload_2 | X^2 oload_2)"));
  auto s = initial_state(mon);
  EXPECT_EQ(distance_to_violation(mon, s), 3u);
  s = monitor_step(mon, s, {{"oload_1", true}, {"oload_2", false}});
  EXPECT_EQ(distance_to_violation(mon, s), 2u);
  s = monitor_step(mon, s, {{"oload_1", true}, {"oload_2", false}});
  EXPECT_EQ(distance_to_violation(mon, s), 1u);
  s = monitor_step(mon, s, {{"oload_1", false}, {"oload_2", true}});
  EXPECT_EQ(distance_to_violation(mon, s), 3u);
}

TEST(Distance, IsExactOnAllShortTraces) {
  // Brute force: the distance equals the fewest worst-case letters that
  // violate the monitor from the current state.
  auto cases = sampleguard::testing::monitor_cases();
  Assignment letters[4];
  for (std::uint8_t b = 0; b < 4; ++b) letters[b] = sampleguard::testing::assignment_of(b);
  for (const auto& mc : cases) {
    Monitor mon = compile_monitor(parse_ltl(mc.text));
    auto fewest = [&](auto&& self, const MonitorState& s, std::size_t budget) -> std::size_t {
      if (!s.alive()) return 0;
      if (budget == 0) return kNeverViolates;
      std::size_t best = kNeverViolates;
      for (const auto& l : letters) {
        std::size_t d = self(self, monitor_step(mon, s, l), budget - 1);
        if (d != kNeverViolates) best = std::min(best, d + 1);
      }
      return best;
    };
    auto walk = [&](auto&& self, const MonitorState& s, std::size_t depth) -> void {
      ASSERT_EQ(distance_to_violation(mon, s), fewest(fewest, s, 4)) << mc.text << " at depth " << depth;
      if (depth == 5 || !s.alive()) return;
      for (const auto& l : letters) self(self, monitor_step(mon, s, l), depth + 1);
    };
    walk(walk, initial_state(mon), 0);
  }
}

TEST(Oracle, ExhaustiveShortTraces) {
  std::uint64_t checked = 0;
  auto failure = sampleguard::testing::exhaustive_monitor_check(8, checked);
  EXPECT_FALSE(failure) << *failure;
  EXPECT_GT(checked, 80000u);
}

TEST(Oracle, RandomLongTraces) {
  auto failure = sampleguard::testing::random_monitor_check(21, 2000, 400);
  EXPECT_FALSE(failure) << *failure;
}

TEST(Oracle, MonitorMatchesSemanticsOnStrengthenedFormulas) {
  std::mt19937_64 rng(22);
  for (int n = 0; n < 1000; ++n) {
    auto c = sampleguard::testing::random_response_case(rng);
    auto r = strengthen(c.mtl, c.delta);
    auto s = sample_dense(c.dense, c.delta);
    auto oracle = eval_ltl_sampled(r.ltl, s);
    auto v = monitor_run(compile_monitor(r.ltl), s);
    ASSERT_EQ(v.violated(), oracle.violated());
    if (v.violated()) {
      EXPECT_EQ(*v.window_start, *oracle.index);
      EXPECT_EQ(*v.index, *oracle.index + static_cast<std::size_t>(*r.horizon_m) - 1);
    }
  }
}
