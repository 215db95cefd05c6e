#include "safegame/automaton.h"

#include <chrono>

#include <gtest/gtest.h>

#include "test_support.h"

namespace safegame::automaton {
namespace {

using formula::Formula;
using formula::Trace;

const std::vector<std::string> kAp5 = testing::props(5);

using testing::example_negated_dfa;

// q0 -> q1 -> q2 -> q3, q3 accepting, every other letter self-loops.
Dfa chain_dfa() {
  const std::vector<std::string> ap{"a", "b"};
  std::vector<int> t = {1, 0, 2, 1, 3, 2, 3, 3};
  return Dfa(ap, 4, 0, {false, false, false, true}, t);
}

bool language_equal(const Dfa& a, const Dfa& b, int max_len) {
  for (const auto& t : testing::all_traces(a.alphabet(), max_len))
    if (accepts(a, t) != accepts(b, t)) return false;
  return true;
}

TEST(LtlfToDfaTest, ExampleNegationHasThreeStates) {
  const Dfa d = example_negated_dfa();
  ASSERT_EQ(d.num_states(), 3);
  EXPECT_EQ(d.initial(), 0);
  EXPECT_FALSE(d.is_accepting(0));
  EXPECT_FALSE(d.is_accepting(1));
  EXPECT_TRUE(d.is_accepting(2));
  EXPECT_EQ(d.next(0, "a0"), 1);
  for (const char* a : {"a1", "a2", "a3", "a4"}) EXPECT_EQ(d.next(0, a), 2);
  EXPECT_EQ(d.next(1, "a0"), 1);
  EXPECT_EQ(d.next(1, "a4"), 1);
  for (const char* a : {"a1", "a2", "a3"}) EXPECT_EQ(d.next(1, a), 2);
  for (const auto& a : kAp5) EXPECT_EQ(d.next(2, a), 2);
}

TEST(LtlfToDfaTest, TrueIsOneAcceptingState) {
  const Dfa d = ltlf_to_dfa(Formula::True(), {"a0", "a1"});
  ASSERT_EQ(d.num_states(), 1);
  EXPECT_TRUE(d.is_accepting(0));
  EXPECT_TRUE(d.has_self_loop(0));
}

TEST(LtlfToDfaTest, AlwaysAtomIsTwoStates) {
  const std::vector<std::string> ap{"a0", "a1"};
  const Formula f = Formula::Always(Formula::Atom("a0"));
  const Dfa d = ltlf_to_dfa(f, ap);
  for (const auto& t : testing::all_traces(ap, 5))
    ASSERT_EQ(accepts(d, t), formula::evaluate(f, t));
  ASSERT_EQ(d.num_states(), 2);
  EXPECT_TRUE(d.is_accepting(0));
  EXPECT_EQ(d.next(0, "a0"), 0);
  EXPECT_EQ(d.next(0, "a1"), 1);
  EXPECT_FALSE(d.is_accepting(1));
  EXPECT_EQ(d.next(1, "a0"), 1);
}

TEST(LtlfToDfaTest, WithoutMinimizationLanguageIsKept) {
  const std::vector<std::string> ap{"a0", "a1"};
  const Formula f = formula::parse("a0 U X a1 | G a1", {});
  const Dfa raw = ltlf_to_dfa(f, ap, {.minimize = false});
  const Dfa min = ltlf_to_dfa(f, ap);
  EXPECT_LE(min.num_states(), raw.num_states());
  EXPECT_TRUE(language_equal(raw, min, 6));
}

TEST(LtlfToDfaTest, Errors) {
  EXPECT_THROW(ltlf_to_dfa(Formula::Atom("zz"), {"a0"}), std::invalid_argument);
  const Formula f = formula::parse("G (a0 U (a1 U X a2))", {});
  EXPECT_THROW(ltlf_to_dfa(f, testing::props(3), {.max_states = 2}),
               StateBudgetExceeded);
}

TEST(LtlfToDfaTest, AgreesWithSemanticsOnRandomFormulas) {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 120; ++i) {
    const auto ap = testing::props(1 + i % 3);
    const Formula f = testing::random_formula(rng, ap, 4);
    const Dfa d = ltlf_to_dfa(f, ap);
    for (const auto& t : testing::all_traces(ap, 5))
      ASSERT_EQ(accepts(d, t), formula::evaluate(f, t))
          << formula::to_string(f);
  }
}

TEST(ComplementTest, Involution) {
  const Dfa d = example_negated_dfa();
  EXPECT_EQ(complement(complement(d)), d);
}

TEST(ComplementTest, AcceptsExactlyTheRejectedWords) {
  const auto phi = formula::parse("a0 & G !(a1 | a2 | a3)", {});
  const Dfa d = ltlf_to_dfa(phi, kAp5);
  const Dfa c = complement(d);
  for (const auto& t : testing::all_traces(kAp5, 4))
    ASSERT_NE(accepts(c, t), accepts(d, t));
  // Complementing the positive automaton matches translating the negation.
  EXPECT_TRUE(language_equal(c, example_negated_dfa(), 5));
}

TEST(ComplementTest, AlwaysVersusEventuallyNot) {
  const std::vector<std::string> ap{"a0", "a1"};
  const Dfa g = ltlf_to_dfa(formula::parse("G a0", {}), ap);
  const Dfa f = ltlf_to_dfa(formula::parse("F !a0", {}), ap);
  EXPECT_TRUE(language_equal(complement(g), f, 5));
}

TEST(AcceptsTest, ExampleWords) {
  const Dfa d = example_negated_dfa();
  EXPECT_TRUE(accepts(d, Trace{"a0", "a0", "a1"}));
  EXPECT_FALSE(accepts(d, Trace{"a0", "a0", "a0"}));
  EXPECT_THROW(accepts(d, Trace{}), std::invalid_argument);
  EXPECT_THROW(accepts(d, Trace{"a0", "b"}), std::invalid_argument);
}

TEST(MinimizeTest, MergesEquivalentStates) {
  // Two accepting sinks reached from q0 are one state.
  const Dfa d({"a", "b"}, 3, 0, {false, true, true}, {1, 2, 1, 1, 2, 2});
  const Dfa m = minimize(d);
  EXPECT_EQ(m.num_states(), 2);
  EXPECT_TRUE(language_equal(d, m, 5));
}

TEST(EnumerateRunsTest, ExampleRuns) {
  const Dfa d = example_negated_dfa();
  const auto runs = enumerate_runs(d, 10);
  ASSERT_EQ(runs.size(), 2u);
  const automaton::Run* short_run = nullptr;
  const automaton::Run* long_run = nullptr;
  for (const auto& r : runs) (r.size() == 2 ? short_run : long_run) = &r;
  ASSERT_NE(short_run, nullptr);
  ASSERT_NE(long_run, nullptr);
  EXPECT_EQ(short_run->states, (std::vector<int>{0, 2}));
  EXPECT_EQ(short_run->letters.front(),
            (std::vector<std::string>{"a1", "a2", "a3", "a4"}));
  EXPECT_EQ(long_run->states, (std::vector<int>{0, 1, 2}));
}

TEST(EnumerateRunsTest, LengthBoundAndReachability) {
  EXPECT_TRUE(enumerate_runs(chain_dfa(), 2).empty());
  EXPECT_EQ(enumerate_runs(chain_dfa(), 3).size(), 1u);
  // Accepting state with no incoming edge.
  const Dfa island({"a"}, 2, 0, {false, true}, {0, 1});
  EXPECT_TRUE(enumerate_runs(island, 10).empty());
  EXPECT_THROW(enumerate_runs(island, 0), std::invalid_argument);
}

TEST(EnumerateRunsTest, RunsAreValid) {
  std::mt19937_64 rng(9);
  const auto ap = testing::props(3);
  for (int i = 0; i < 60; ++i) {
    const Dfa d = ltlf_to_dfa(testing::random_formula(rng, ap, 3), ap);
    const int horizon = 1 + i % 6;
    for (const auto& r : enumerate_runs(d, horizon)) {
      ASSERT_GE(r.size(), 2u);
      ASSERT_LE(static_cast<int>(r.size()) - 1, horizon);
      ASSERT_EQ(r.states.front(), d.initial());
      ASSERT_TRUE(d.is_accepting(r.states.back()));
      for (std::size_t k = 0; k + 1 < r.size(); ++k) {
        ASSERT_NE(r.states[k], r.states[k + 1]);
        ASSERT_FALSE(r.letters[k].empty());
        for (const auto& a : r.letters[k])
          ASSERT_EQ(d.next(r.states[k], a), r.states[k + 1]);
      }
      for (const auto& t : triple_paths(r, horizon, d)) {
        ASSERT_GE(t.loop_bound, 1);
        ASSERT_LE(t.loop_bound, horizon + 2 - 3);
      }
    }
  }
}

TEST(RunsFromLabelTest, SplitsByFirstLetter) {
  const Dfa d = example_negated_dfa();
  const auto runs = enumerate_runs(d, 10);
  const auto a0 = runs_from_label(runs, "a0");
  ASSERT_EQ(a0.size(), 1u);
  EXPECT_EQ(a0.front().states, (std::vector<int>{0, 1, 2}));
  for (const char* a : {"a1", "a2", "a3", "a4"}) {
    const auto r = runs_from_label(runs, a);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r.front().size(), 2u);
    EXPECT_TRUE(triple_paths(r.front(), 10, d).empty());
  }
  EXPECT_TRUE(runs_from_label({}, "a0").empty());
}

TEST(TriplePathsTest, LoopBounds) {
  const Dfa d = example_negated_dfa();
  const auto run = runs_from_label(enumerate_runs(d, 10), "a0").front();
  EXPECT_EQ(triple_paths(run, 10, d),
            (std::vector<TriplePath>{{0, 1, 2, 9}}));
  // Same run through a middle state without a self-loop.
  const Dfa noloop({"a", "b"}, 3, 0, {false, false, true}, {1, 2, 2, 2, 2, 2});
  automaton::Run r{{0, 1, 2}, {{"a"}, {"a", "b"}}};
  EXPECT_EQ(triple_paths(r, 10, noloop),
            (std::vector<TriplePath>{{0, 1, 2, 1}}));
  EXPECT_TRUE(triple_paths(automaton::Run{{0, 2}, {{"a1"}}}, 10, d).empty());
}

TEST(DotTest, MentionsEveryState) {
  const std::string dot = to_dot(example_negated_dfa());
  for (const char* q : {"q0", "q1", "q2"})
    EXPECT_NE(dot.find(q), std::string::npos);
  EXPECT_NE(dot.find("doublecircle"), std::string::npos);
}

}  // namespace
}  // namespace safegame::automaton
