#include "safegame/pipeline.h"

#include <fstream>

#include <gtest/gtest.h>

#include "test_support.h"

namespace safegame::pipeline {
namespace {

barrier::Certificate printed_certificate(const game::GameModel& m) {
  std::ifstream in(testing::data_path("example_barrier.json"));
  return barrier::certificate_from_json(nlohmann::json::parse(in), m);
}

TEST(PipelineTest, ExampleTripleTable) {
  const auto m = testing::example_model();
  BoundOptions opts;
  opts.source = BarrierSource::kVerify;
  opts.certificate = printed_certificate(m);
  opts.verify.grid_points = 61;
  const auto r = run_bound(m, testing::kExampleFormula, opts);
  ASSERT_EQ(r.triples.size(), 1u);
  const auto& row = r.triples[0];
  EXPECT_EQ(row.triple, (automaton::TriplePath{0, 1, 2, 9}));
  EXPECT_EQ(row.labels, std::vector<std::string>{"a0"});
  // The printed barrier fails the grid check, so the triple keeps the
  // trivial factor.
  EXPECT_EQ(row.source, "trivial");
  ASSERT_TRUE(row.report);
  EXPECT_FALSE(row.report->unsafe.pass);
  for (const auto& a : {"a0", "a1", "a2", "a3", "a4"}) EXPECT_EQ(r.bounds.at(a), 0.0) << a;
  for (const auto& a : {"a1", "a2", "a3", "a4"})
    for (const auto& run : r.runs.at(a)) EXPECT_EQ(run.size(), 2u);
  EXPECT_EQ(r.to_json()["triples"][0]["loop_bound"], 9);
}

TEST(PipelineTest, StageErrorsNameTheStage) {
  const auto m = testing::example_model();
  try {
    run_bound(m, "G unknown", {});
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "parse");
  }
  EXPECT_THROW(run_bound(m, "F a1", {}), StageError);  // not in the safe fragment
  BoundOptions verify;
  verify.source = BarrierSource::kVerify;
  EXPECT_THROW(run_bound(m, "G a0", verify), StageError);
}

TEST(PipelineTest, FrozenDynamicsNeverLeaveTheInitialSet) {
  auto m = testing::with_dynamics(testing::example_model(), {"0", "0"});
  BoundOptions opts;
  opts.x0 = std::vector<double>{0.0, 0.0};
  opts.mc_samples = 500;
  const auto r = run_bound(m, "G a0", opts);
  EXPECT_TRUE(r.triples.empty());
  EXPECT_EQ(r.bounds.at("a0"), 1.0);
  ASSERT_TRUE(r.monte_carlo);
  EXPECT_FALSE(r.monte_carlo->conflict);
  for (const auto& e : r.monte_carlo->estimates) EXPECT_EQ(e.stats.estimate, 1.0);
}

TEST(PipelineTest, CsvHasOneRowPerLabelAndTriple) {
  const auto m = testing::example_model();
  BoundOptions opts;
  opts.source = BarrierSource::kVerify;
  opts.certificate = printed_certificate(m);
  opts.verify.grid_points = 31;
  const auto csv = run_bound(m, testing::kExampleFormula, opts).to_csv();
  EXPECT_EQ(csv,
            "label,q,q_mid,q_end,loop_bound,delta,c,source,bound\n"
            "a0,q0,q1,q2,9,1,0,trivial,0\n"
            "a1,,,,,,,,0\na2,,,,,,,,0\na3,,,,,,,,0\na4,,,,,,,,0\n");
}

}  // namespace
}  // namespace safegame::pipeline
