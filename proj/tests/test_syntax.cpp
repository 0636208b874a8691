#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "sampleguard/syntax.hpp"

using namespace sampleguard;

namespace {

MtlFormula eq1(int kappa) {
  auto o = MtlFormula::atom("oload_1");
  return MtlFormula::globally(MtlFormula::implies(o, MtlFormula::eventually_within(Duration(0), Duration(kappa), MtlFormula::negate(o))));
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::Io;
}

}  // namespace

TEST(ParseMtl, BoundedOverload) {
  EXPECT_EQ(parse_mtl("G (oload_1 -> F[0,10] !oload_1)"), eq1(10));
}

TEST(ParseMtl, NoBlackout) {
  auto f = parse_mtl("G (!blackout_2)");
  EXPECT_EQ(f, MtlFormula::globally(MtlFormula::negate(MtlFormula::atom("blackout_2"))));
  EXPECT_EQ(f.child().child().atom_value().kind, AtomKind::Blackout);
  EXPECT_EQ(f.child().child().atom_value().id, 2u);
}

TEST(ParseMtl, ReversedIntervalIsDurationError) {
  EXPECT_EQ(code_of([] { parse_mtl("G (oload_1 -> F[10,0] !oload_1)"); }), ErrorCode::Duration);
}

TEST(ParseMtl, NegativeBoundIsDurationError) {
  EXPECT_EQ(code_of([] { parse_mtl("G (p -> F[-1,3] q)"); }), ErrorCode::Duration);
}

TEST(ParseMtl, DurationLiterals) {
  auto f = parse_mtl("G (p -> F[0, 2.5min] q)");
  EXPECT_EQ(f.child().rhs().hi(), Duration(5, 2));
  auto g = parse_mtl("G (p -> F[1/3,7/2 min] q)");
  EXPECT_EQ(g.child().rhs().lo(), Duration(1, 3));
  EXPECT_EQ(g.child().rhs().hi(), Duration(7, 2));
}

TEST(ParseMtl, NextIsRejected) {
  EXPECT_EQ(code_of([] { parse_mtl("G (p -> X q)"); }), ErrorCode::Syntax);
}

TEST(ParseMtl, SyntaxErrorCarriesPosition) {
  try {
    parse_mtl("G (oload_1 -> )");
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.code(), ErrorCode::Syntax);
    EXPECT_EQ(e.position(), 14u);
  }
  EXPECT_EQ(code_of([] { parse_mtl("G (p"); }), ErrorCode::Syntax);
  EXPECT_EQ(code_of([] { parse_mtl("p q"); }), ErrorCode::Syntax);
  EXPECT_EQ(code_of([] { parse_mtl("Oload"); }), ErrorCode::Syntax);
}

TEST(ParseLtl, StrengthenedOverloadM2) {
  auto o = LtlFormula::atom("oload_1");
  auto no = LtlFormula::negate(o);
  auto expected = LtlFormula::globally(LtlFormula::implies(o, LtlFormula::disj(no, LtlFormula::next(no))));
  EXPECT_EQ(parse_ltl("G (oload_1 -> (!oload_1 | X !oload_1))"), expected);
}

TEST(ParseLtl, NextPowerExpands) {
  auto p = LtlFormula::atom("p");
  EXPECT_EQ(parse_ltl("X^3 p"), LtlFormula::next(LtlFormula::next(LtlFormula::next(p))));
  EXPECT_EQ(parse_ltl("X^0 p"), p);
}

TEST(ParseLtl, IntervalNotAllowed) {
  EXPECT_EQ(code_of([] { parse_ltl("G F[0,5] p"); }), ErrorCode::IntervalNotAllowed);
}

TEST(Format, Examples) {
  EXPECT_EQ(format_formula(MtlFormula::globally(MtlFormula::negate(MtlFormula::atom("blackout_1")))), "G (!blackout_1)");
  EXPECT_EQ(format_formula(parse_ltl("G (oload_1 -> (!oload_1 | X !oload_1))")),
            "G (oload_1 -> (!oload_1 | X !oload_1))");
  EXPECT_EQ(format_formula(LtlFormula::next_pow(1, LtlFormula::atom("p"))), "X p");
  EXPECT_EQ(format_formula(eq1(10)), "G (oload_1 -> F[0,10] !oload_1)");
  EXPECT_EQ(format_formula(parse_ltl("X X p")), "X^2 p");
}

TEST(Format, AssociativityIsPreserved) {
  auto a = LtlFormula::atom("a"), b = LtlFormula::atom("b"), c = LtlFormula::atom("c");
  auto left = LtlFormula::disj(LtlFormula::disj(a, b), c);
  auto right = LtlFormula::disj(a, LtlFormula::disj(b, c));
  EXPECT_EQ(format_formula(left), "a | b | c");
  EXPECT_EQ(format_formula(right), "a | (b | c)");
  EXPECT_EQ(parse_ltl(format_formula(right)), right);
  auto imp = LtlFormula::implies(LtlFormula::implies(a, b), c);
  EXPECT_EQ(parse_ltl(format_formula(imp)), imp);
}

TEST(Duration, ExactArithmetic) {
  Duration third(1, 3);
  EXPECT_EQ(third * 3, Duration(1));
  EXPECT_EQ(third + third + third, Duration(1));
  EXPECT_EQ(Duration(10).floor_div(Duration(5)), 2);
  EXPECT_EQ(Duration(7).floor_div(Duration(2)), 3);
  EXPECT_EQ(parse_duration("0.1") * 10, Duration(1));
}

TEST(Atom, KindFromPrefix) {
  EXPECT_EQ(make_atom("oload_3").kind, AtomKind::Overload);
  EXPECT_EQ(make_atom("oload_3").id, 3u);
  EXPECT_EQ(make_atom("blackout_12").kind, AtomKind::Blackout);
  EXPECT_EQ(make_atom("oload_x").kind, AtomKind::Generic);
  EXPECT_EQ(make_atom("p").kind, AtomKind::Generic);
  EXPECT_THROW(make_atom("3p"), Error);
}

TEST(FormulaFile, CommentsAndBlankLines) {
  std::istringstream in("# header\n\nG (!blackout_1)   # trailing\n  G (p -> F[0,10] !p)\n");
  auto lines = split_formula_lines(in);
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0].line, 3u);
  EXPECT_EQ(lines[0].text, "G (!blackout_1)");
  EXPECT_EQ(lines[1].text, "G (p -> F[0,10] !p)");
}

namespace {

template <Dialect D>
Formula<D> random_formula(std::mt19937_64& rng, int depth) {
  using F = Formula<D>;
  static const char* names[] = {"p", "q", "oload_1", "blackout_2", "x_9"};
  std::uniform_int_distribution<int> pick(0, depth <= 1 ? 0 : 7);
  switch (pick(rng)) {
    case 0: return F::atom(names[rng() % 5]);
    case 1: return F::negate(random_formula<D>(rng, depth - 1));
    case 2: return F::conj(random_formula<D>(rng, depth - 1), random_formula<D>(rng, depth - 1));
    case 3: return F::disj(random_formula<D>(rng, depth - 1), random_formula<D>(rng, depth - 1));
    case 4: return F::implies(random_formula<D>(rng, depth - 1), random_formula<D>(rng, depth - 1));
    case 5: return F::globally(random_formula<D>(rng, depth - 1));
    case 6: return F::eventually(random_formula<D>(rng, depth - 1));
    default:
      if constexpr (D == Dialect::Mtl) {
        Duration lo(static_cast<std::int64_t>(rng() % 7), static_cast<std::int64_t>(rng() % 4 + 1));
        Duration hi = lo + Duration(static_cast<std::int64_t>(rng() % 9), static_cast<std::int64_t>(rng() % 3 + 1));
        return F::eventually_within(lo, hi, random_formula<D>(rng, depth - 1));
      } else {
        return F::next_pow(rng() % 4, random_formula<D>(rng, depth - 1));
      }
  }
}

}  // namespace

TEST(RoundTrip, RandomMtl) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 3000; ++i) {
    auto f = random_formula<Dialect::Mtl>(rng, 1 + static_cast<int>(rng() % 8));
    auto text = format_formula(f);
    ASSERT_EQ(parse_mtl(text), f) << text;
  }
}

TEST(RoundTrip, RandomLtl) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 3000; ++i) {
    auto f = random_formula<Dialect::Ltl>(rng, 1 + static_cast<int>(rng() % 8));
    auto text = format_formula(f);
    ASSERT_EQ(parse_ltl(text), f) << text;
  }
}

TEST(NextPow, ExactlyJNextNodes) {
  auto p = LtlFormula::atom("p");
  for (std::size_t j = 0; j < 20; ++j) {
    auto f = LtlFormula::next_pow(j, p);
    std::size_t count = 0;
    while (f.op() == Op::Next) {
      ++count;
      f = f.child();
    }
    EXPECT_EQ(count, j);
    EXPECT_EQ(f, p);
  }
}
