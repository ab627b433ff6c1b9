#include <gtest/gtest.h>

#include <numeric>

#include "galaxy/graph_builder.hpp"
#include "galaxy/pool_sim.hpp"
#include "galaxy/strategies.hpp"
#include "oracles.hpp"

using namespace galaxy;

using oracle::cut_edges;

TEST(SeparablePool, OneCutPerGraph) {
  for (auto [n_id, n_od] : {std::pair{10u, 90u}, {1u, 1u}, {500u, 9500u}, {37u, 4u}}) {
    const auto p = make_separable_pool(n_id, n_od, 0.0, n_id * 31 + n_od);
    const auto g = build_graphs(p.scores);
    for (std::size_t k = 0; k < 2; ++k) EXPECT_EQ(cut_edges(g, class_id(k), p.pool.true_labels), 1u);
  }
}

TEST(SeparablePool, SkewPushesUncertaintyIntoOod) {
  const auto p = make_separable_pool(10, 90, 0.3, 5);
  EXPECT_DOUBLE_EQ(p.threshold, 0.2);
  const auto b = confidence_sampling_batch(p.scores, LabeledSet(100), 20);
  for (auto x : b.ids) EXPECT_EQ(p.pool.true_labels[x.value], ClassId{1});
  const auto g = build_graphs(p.scores);
  EXPECT_EQ(cut_edges(g, ClassId{0}, p.pool.true_labels), 1u);
}

TEST(SeparablePool, DeterministicPerSeed) {
  EXPECT_EQ(make_separable_pool(20, 80, 0.1, 9).scores, make_separable_pool(20, 80, 0.1, 9).scores);
  EXPECT_NE(make_separable_pool(20, 80, 0.1, 9).scores, make_separable_pool(20, 80, 0.1, 10).scores);
  EXPECT_THROW(make_separable_pool(0, 5, 0.0, 1), input_error);
  EXPECT_THROW(make_separable_pool(5, 5, 0.5, 1), input_error);
}

TEST(ImbalancedPool, RespectsEpsilon) {
  for (auto [n, k, eps] : {std::tuple{20000u, 2u, 0.01}, {5000u, 5u, 0.05}, {1000u, 3u, 0.3}, {100u, 2u, 1.0}}) {
    const auto sizes = imbalanced_class_sizes(n, k, eps);
    EXPECT_EQ(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}), n);
    for (std::size_t c = 0; c + 1 < k; ++c) {
      EXPECT_GE(sizes[c], 1u);
      EXPECT_LE(static_cast<double>(sizes[c]), eps * static_cast<double>(sizes[k - 1]));
    }
  }
  const auto balanced = imbalanced_class_sizes(100, 2, 1.0);
  EXPECT_EQ(balanced[0], 50u);
  EXPECT_EQ(balanced[1], 50u);
  EXPECT_THROW(imbalanced_class_sizes(10, 5, 0.01), input_error);
  EXPECT_THROW(imbalanced_class_sizes(10, 2, 0.0), input_error);
  EXPECT_THROW(imbalanced_class_sizes(10, 1, 0.5), input_error);
}

TEST(Presets, TableSizes) {
  const auto& c2 = find_preset("cifar100-2");
  EXPECT_EQ(c2.sizes.back(), 49500u);
  EXPECT_EQ(std::accumulate(c2.sizes.begin(), c2.sizes.end(), std::size_t{0}), 50000u);
  EXPECT_NEAR(detail::realized_epsilon(c2.sizes), c2.reported_epsilon, 5e-5);
  const auto& s3 = find_preset("svhn-3");
  EXPECT_EQ(s3.sizes.back(), 54448u);
  EXPECT_EQ(s3.sizes[0] + s3.sizes[1], 18809u);
  EXPECT_NEAR(detail::realized_epsilon(s3.sizes), s3.reported_epsilon, 5e-5);
  for (const auto& p : pool_presets()) EXPECT_NEAR(detail::realized_epsilon(p.sizes), p.reported_epsilon, 5e-4) << p.name;
  EXPECT_THROW(find_preset("imagenet-2"), input_error);
}

TEST(SyntheticProvider, ScoresAreValidAndDeterministic) {
  auto a = make_imbalanced_pool(2000, 3, 0.1, ModelQuality{}, 3);
  auto b = make_imbalanced_pool(2000, 3, 0.1, ModelQuality{}, 3);
  LabeledSet l(2000);
  EXPECT_EQ(a.provider.scores(l), b.provider.scores(l));
  EXPECT_EQ(a.pool.true_labels, b.pool.true_labels);
  EXPECT_THROW(a.provider.scores(LabeledSet(10)), protocol_error);
}

TEST(SyntheticProvider, MoreLabelsImproveAccuracy) {
  ModelQuality q;
  auto p = make_imbalanced_pool(4000, 2, 0.2, q, 8);
  auto accuracy = [&](const LabeledSet& l) {
    const auto s = p.provider.scores(l);
    std::vector<ClassId> pred;
    for (std::size_t i = 0; i < s.rows(); ++i) pred.push_back(class_id(s.argmax(i)));
    return balanced_accuracy(pred, p.pool.true_labels, 2).value;
  };
  LabeledSet few(4000), many(4000);
  for (std::size_t i = 0; i < 4000; i += 4) many.add(example(i), p.pool.true_labels[i]);
  EXPECT_GT(accuracy(many), accuracy(few));
}

TEST(SyntheticProvider, SkewMovesTheThresholdForOod) {
  ModelQuality q;
  q.skew = 0.3;
  auto p = make_imbalanced_pool(4000, 2, 0.05, q, 2);
  const auto s = p.provider.scores(LabeledSet(4000));
  // With an in-distribution logit bonus, most pool examples sit on the
  // in-distribution side of 0.5 even though the pool is mostly OOD.
  std::size_t predicted_id = 0;
  for (std::size_t i = 0; i < s.rows(); ++i) predicted_id += s.argmax(i) == 0;
  EXPECT_GT(predicted_id, 4000u / 20);
}
