#include <gtest/gtest.h>

#include "support.hpp"

using namespace pubflow;
using namespace pubflow::testing;

TEST(Live, DiamondCompletesWithACleanLog) {
  LiveOptions opt;
  auto b = diamond();
  auto r = run_live(b, {worker("w1"), worker("w2"), worker("w3")}, {}, opt);
  ASSERT_TRUE(r.completed) << r.outcome;
  EXPECT_TRUE(audit_log(r.log, b).empty());
  EXPECT_EQ(of_kind(parse_log(r.log), "emergency").size(), 1u);
}

TEST(Live, AdaptMatchesOracle) {
  adapt::SimParams p;
  p.N = 3;
  auto b = adapt::generate_adapt_workflow(4, 3, 16, p);
  LiveOptions opt;
  opt.kernels = adapt_kernels();
  std::vector<WorkerProfile> pool;
  for (int i = 0; i < 4; ++i) pool.push_back(worker("w" + std::to_string(i)));
  auto r = run_live(b, pool, {}, opt);
  ASSERT_TRUE(r.completed) << r.outcome;
  EXPECT_TRUE(audit_log(r.log, b).empty());
  EXPECT_EQ(adapt::final_field(*r.workspace, b), adapt::sequential_oracle(16, p));
}

TEST(Live, NoWorkersTimesOut) {
  LiveOptions opt;
  opt.timeout = std::chrono::milliseconds(200);
  auto r = run_live(make_batch({make_task("A")}), {}, {}, opt);
  EXPECT_FALSE(r.completed);
  EXPECT_EQ(r.outcome, "timeout");
}
