#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <optional>
#include <vector>

#include "galaxy/graph_builder.hpp"
#include "galaxy/linear_graph.hpp"
#include "galaxy/random.hpp"
#include "oracles.hpp"

using namespace galaxy;

using oracle::brute_force_path;
using oracle::random_scores;

TEST(Ranking, RejectsNonPermutation) {
  EXPECT_THROW(Ranking(ClassId{0}, {example(0), example(0)}), input_error);
  EXPECT_THROW(Ranking(ClassId{0}, {example(0), example(2)}), input_error);
  const Ranking r(ClassId{0}, {example(2), example(0), example(1)});
  EXPECT_EQ(r.position[2], 0u);
  EXPECT_EQ(r.position[1], 2u);
}

TEST(GraphSet, NeighborsFollowOrder) {
  GraphSet g({Ranking(ClassId{0}, {example(3), example(1), example(0), example(4), example(2)})});
  EXPECT_EQ(neighbors(g, ClassId{0}, example(0)), (std::vector<ExampleId>{example(1), example(4)}));
  EXPECT_EQ(neighbors(g, ClassId{0}, example(3)), (std::vector<ExampleId>{example(1)}));
  g.set_order(2);
  EXPECT_EQ(neighbors(g, ClassId{0}, example(0)),
            (std::vector<ExampleId>{example(1), example(2), example(3), example(4)}));
  g.remove_cut(example(0), example(3));
  EXPECT_EQ(neighbors(g, ClassId{0}, example(0)), (std::vector<ExampleId>{example(1), example(2), example(4)}));
  EXPECT_EQ(neighbors(g, ClassId{0}, example(3)), (std::vector<ExampleId>{example(1)}));
  EXPECT_THROW(neighbors(g, ClassId{1}, example(0)), input_error);
  EXPECT_THROW(neighbors(g, ClassId{0}, example(5)), input_error);
  EXPECT_THROW(g.set_order(5), order_exhausted);
}

TEST(GraphSet, NeighborRelationIsSymmetric) {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const auto s = random_scores(30, 3, rng);
    auto g = build_graphs(s);
    g.set_order(1 + static_cast<std::uint32_t>(rep % 3));
    for (int r = 0; r < 10; ++r) g.remove_cut(example(uniform_below(rng, 30)), example(uniform_below(rng, 30)));
    for (std::size_t k = 0; k < 3; ++k)
      for (std::size_t x = 0; x < 30; ++x)
        for (auto y : neighbors(g, class_id(k), example(x))) {
          const auto back = neighbors(g, class_id(k), y);
          EXPECT_TRUE(std::find(back.begin(), back.end(), example(x)) != back.end());
        }
  }
}

TEST(StraddlingPath, HandTraceClassOne) {
  // Class-1 scores 0.1, 0.2, 0.3, 0.8, 0.9 on a binary pool.
  const ScoreMatrix s(5, 2, {0.9f, 0.1f, 0.8f, 0.2f, 0.7f, 0.3f, 0.2f, 0.8f, 0.1f, 0.9f});
  const auto g = build_graphs(s);
  LabeledSet l(5);
  l.add(example(0), ClassId{0});
  l.add(example(4), ClassId{1});
  const auto p = shortest_straddling_path(g, ClassId{1}, l);
  ASSERT_TRUE(p);
  EXPECT_EQ(p->nodes, (std::vector<ExampleId>{example(4), example(3), example(2), example(1), example(0)}));
  EXPECT_EQ(p->edges(), 4u);
  const auto p0 = shortest_straddling_path(g, ClassId{0}, l);
  ASSERT_TRUE(p0);
  EXPECT_EQ(p0->nodes.front(), example(0));
  EXPECT_EQ(p0->edges(), 4u);
}

TEST(StraddlingPath, NoneWithoutBothSides) {
  const ScoreMatrix s(3, 2, {0.9f, 0.1f, 0.5f, 0.5f, 0.2f, 0.8f});
  const auto g = build_graphs(s);
  LabeledSet l(3);
  EXPECT_FALSE(shortest_straddling_path(g, ClassId{0}, l));
  l.add(example(0), ClassId{0});
  EXPECT_FALSE(shortest_straddling_path(g, ClassId{0}, l));
  l.add(example(1), ClassId{0});
  EXPECT_FALSE(shortest_straddling_path(g, ClassId{1}, l));
}

TEST(StraddlingPath, MatchesExhaustiveSearchOnRandomPools) {
  std::size_t with_path = 0;
  EXPECT_EQ(oracle::compare_paths_on_random_pools(200, 20240601, with_path), 0u);
  EXPECT_GT(with_path, 100u);
}

TEST(Midpoint, EvenPathIsDeterministic) {
  Path p{ClassId{0}, {example(0), example(1), example(2), example(3), example(4)}};
  Rng rng(1);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(path_midpoint(p, rng), example(2));
}

TEST(Midpoint, OddPathSplitsEvenly) {
  Path p{ClassId{0}, {example(0), example(1), example(2), example(3)}};
  Rng rng(7);
  int low = 0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const auto m = path_midpoint(p, rng);
    ASSERT_TRUE(m == example(1) || m == example(2));
    low += m == example(1);
  }
  EXPECT_NEAR(static_cast<double>(low) / draws, 0.5, 0.02);
}

TEST(Midpoint, ShortPathIsContractViolation) {
  Rng rng(1);
  EXPECT_THROW(path_midpoint(Path{ClassId{0}, {example(0), example(1)}}, rng), contract_violation);
}

TEST(RemoveCutEdges, RemovesOnlyOppositeLabels) {
  GraphSet g({Ranking(ClassId{0}, {example(0), example(1), example(2), example(3)})}, 2);
  LabeledSet l(4);
  l.add(example(0), ClassId{0});
  l.add(example(2), ClassId{1});
  l.add(example(1), ClassId{1});
  remove_cut_edges(g, example(1), l);
  EXPECT_TRUE(g.is_removed(example(0), example(1)));
  EXPECT_FALSE(g.is_removed(example(1), example(2)));
  EXPECT_FALSE(g.is_removed(example(0), example(2)));
  remove_cut_edges(g, example(0), l);
  EXPECT_TRUE(g.is_removed(example(0), example(2)));
  EXPECT_EQ(g.removed_cuts().size(), 2u);
}
