#include <gtest/gtest.h>

#include <functional>

#include "support.hpp"

using namespace pubflow;
using namespace pubflow::testing;

namespace {

// Independent recogniser by recursive decomposition of the two-terminal
// closure: a parallel split exists when removing the terminals leaves several
// components, a series split when some vertex separates s from t.
using Edge = std::pair<int, int>;

bool sp_oracle(const std::vector<Edge>& edges, int s, int t) {
  if (edges.size() == 1) return edges[0] == Edge{s, t};
  if (edges.empty()) return false;

  // Components of the edge set once the terminals are removed; each direct
  // s->t edge stands alone.
  std::map<int, int> comp;
  std::function<int(int)> find = [&](int x) { return comp[x] == x ? x : comp[x] = find(comp[x]); };
  std::set<int> inner;
  for (auto [u, v] : edges) {
    if (u != s && u != t) inner.insert(u);
    if (v != s && v != t) inner.insert(v);
  }
  for (int x : inner) comp[x] = x;
  for (auto [u, v] : edges)
    if (inner.contains(u) && inner.contains(v)) comp[find(u)] = find(v);
  std::map<int, std::vector<Edge>> groups;
  int direct = 0;
  for (auto e : edges) {
    if (e == Edge{s, t}) {
      groups[-1 - direct++].push_back(e);
      continue;
    }
    int key = inner.contains(e.first) ? find(e.first) : find(e.second);
    groups[key].push_back(e);
  }
  if (groups.size() >= 2) {
    for (const auto& [_, g] : groups)
      if (!sp_oracle(g, s, t)) return false;
    return true;
  }

  // Series: a vertex m that every s-t path crosses.
  for (int m : inner) {
    std::set<int> reach{s};
    for (bool grew = true; grew;) {
      grew = false;
      for (auto [u, v] : edges) {
        if (u == m || v == m) continue;
        if (reach.contains(u) && !reach.contains(v)) grew = reach.insert(v).second || grew;
        if (reach.contains(v) && !reach.contains(u)) grew = reach.insert(u).second || grew;
      }
    }
    if (reach.contains(t)) continue;
    std::vector<Edge> first, second;
    for (auto e : edges) {
      bool in_first = reach.contains(e.first) || reach.contains(e.second);
      (in_first ? first : second).push_back(e);
    }
    return sp_oracle(first, s, m) && sp_oracle(second, m, t);
  }
  return false;
}

bool oracle_for(const WorkflowBatch& b) {
  std::map<TaskId, int> index;
  for (const auto& [id, _] : b.tasks) index.emplace(id, static_cast<int>(index.size()));
  const int s = -1, t = -2;
  std::vector<Edge> edges;
  std::set<int> has_pred, has_succ;
  for (const auto& [id, task] : b.tasks)
    for (const auto& d : task.deps) {
      edges.emplace_back(index.at(d), index.at(id));
      has_pred.insert(index.at(id));
      has_succ.insert(index.at(d));
    }
  for (const auto& [id, i] : index) {
    if (!has_pred.contains(i)) edges.emplace_back(s, i);
    if (!has_succ.contains(i)) edges.emplace_back(i, t);
  }
  return sp_oracle(edges, s, t);
}

WorkflowBatch from_mask(int n, std::uint32_t mask) {
  std::vector<Task> tasks;
  int bit = 0;
  std::vector<std::set<TaskId>> deps(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j, ++bit)
      if (mask & (1u << bit)) deps[static_cast<std::size_t>(j)].insert(node_name(i));
  for (int j = 0; j < n; ++j) tasks.push_back(make_task(node_name(j), deps[static_cast<std::size_t>(j)]));
  return make_batch(std::move(tasks));
}

}  // namespace

TEST(SeriesParallelOracle, SanityOnKnownShapes) {
  EXPECT_TRUE(oracle_for(diamond()));
  EXPECT_TRUE(oracle_for(make_batch({make_task("A"), make_task("B", {"A"})})));
  auto n = make_batch({make_task("a"), make_task("b"), make_task("c", {"a"}), make_task("d", {"a", "b"})});
  EXPECT_FALSE(oracle_for(n));
}

TEST(SeriesParallel, AgreesWithOracleOnEveryDagUpToFiveNodes) {
  int checked = 0, sp = 0;
  for (int n = 1; n <= 5; ++n) {
    const int pairs = n * (n - 1) / 2;
    for (std::uint32_t mask = 0; mask < (1u << pairs); ++mask) {
      auto b = from_mask(n, mask);
      const bool expect = oracle_for(b);
      ASSERT_EQ(is_series_parallel(b.tasks), expect) << "n=" << n << " mask=" << mask;
      ++checked;
      sp += expect;
    }
  }
  EXPECT_EQ(checked, 1 + 2 + 8 + 64 + 1024);
  EXPECT_GT(sp, 0);
  EXPECT_LT(sp, checked);
}

TEST(SeriesParallel, AgreesWithOracleOnRandomLargerDags) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 6 + static_cast<int>(rng() % 4);
    auto b = random_dag(rng, n, 0.1 + 0.1 * static_cast<double>(rng() % 5));
    ASSERT_EQ(is_series_parallel(b.tasks), oracle_for(b)) << "trial " << trial;
  }
}

TEST(SeriesParallel, AdaptLayoutsAgreeWithOracle) {
  auto stencil = adapt::generate_adapt_workflow(8, 2, 64, {});
  EXPECT_FALSE(is_series_parallel(stencil.tasks));
  EXPECT_TRUE(stencil.general_dag());
  adapt::AdaptOptions barrier;
  barrier.edges = adapt::EdgeMode::Barrier;
  auto b = adapt::generate_adapt_workflow(8, 2, 64, {}, barrier);
  EXPECT_EQ(is_series_parallel(b.tasks), oracle_for(b));
  EXPECT_EQ(is_series_parallel(stencil.tasks), oracle_for(stencil));
}
