#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "metric_oracle.hpp"
#include "paretoab/metrics.hpp"
#include "paretoab/world.hpp"

namespace paretoab {
namespace {

TEST(RankOfTarget, TiesGoToSmallerId) {
  const Eigen::Vector4d s(1.0, 3.0, 3.0, 0.5);
  EXPECT_EQ(rank_of_target(s, 1), 1);
  EXPECT_EQ(rank_of_target(s, 2), 2);
  EXPECT_EQ(rank_of_target(s, 0), 3);
  EXPECT_EQ(rank_of_target(s, 3), 4);
  EXPECT_THROW(rank_of_target(s, 4), std::out_of_range);
}

TEST(RankedMetrics, HandExample) {
  // Ranks 1, 5, 2, 30 with labels o = 1, 1, 0, 1 and K = 5.
  const std::vector<RankedClick> r{{1, true}, {5, true}, {2, false}, {30, true}};
  EXPECT_DOUBLE_EQ(recall_from_ranks(r, 5), 0.75);
  EXPECT_DOUBLE_EQ(order_density_from_ranks(r, 5), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(recall_from_ranks(r, 1), 0.25);
  EXPECT_DOUBLE_EQ(order_density_from_ranks(r, 1), 1.0);
}

TEST(RankedMetrics, ZeroOrdersIsZeroNotUndefined) {
  const std::vector<RankedClick> r{{1, false}, {2, false}};
  EXPECT_EQ(order_density_from_ranks(r, 5), 0.0);
}

TEST(RankedMetrics, UndefinedCases) {
  const std::vector<RankedClick> r{{7, true}, {9, false}};
  EXPECT_EQ(recall_from_ranks(r, 5), 0.0);
  EXPECT_THROW(order_density_from_ranks(r, 5), UndefinedMetric);
  EXPECT_THROW(recall_from_ranks({}, 5), UndefinedMetric);
}

TEST(RankedMetrics, BruteForceFixtures) {
  Rng gen(17);
  int undefined = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const auto f = testing::random_fixture(gen);
    EXPECT_TRUE(testing::fixture_agrees(f)) << "fixture " << rep;
    if (!testing::brute_metrics(f).od) ++undefined;
  }
  EXPECT_GT(undefined, 0);
}

class FrontTest : public ::testing::Test {
 protected:
  void SetUp() override {
    WorldConfig wc;
    wc.catalog_size = 60;
    const World w = generate_world(wc, 2);
    test_ = sample_sessions(w, 120, 3);
    Hyperparams hp;
    hp.catalog_size = 60;
    hp.embed_dim = 8;
    hp.hidden_dim = 8;
    hp.seed = 4;
    model_ = init_model(hp);
  }

  Dataset test_;
  Model model_;
};

// Scores per instance through encode_session, ranks by a double loop.
TEST_F(FrontTest, RecallMatchesPerInstanceOracle) {
  const PreferenceVector pi = PreferenceVector::click_weight(0.3);
  constexpr int k = 10;
  std::size_t n = 0, hits = 0, ordered_hits = 0;
  for (const Example& ex : make_examples(test_)) {
    const Eigen::VectorXd s = click_scores(model_, encode_session(model_, std::span<const ItemId>(ex.prefix), pi));
    int better = 0;
    for (Eigen::Index j = 0; j < s.size(); ++j) better += s[j] > s[ex.target] || (s[j] == s[ex.target] && j < ex.target);
    ++n;
    if (better < k) {
      ++hits;
      ordered_hits += ex.ordered;
    }
  }
  EXPECT_EQ(recall_at_k(model_, test_, pi, k), static_cast<double>(hits) / static_cast<double>(n));
  EXPECT_EQ(order_density_at_k(model_, test_, pi, k), static_cast<double>(ordered_hits) / static_cast<double>(hits));
}

TEST_F(FrontTest, SweepRows) {
  const auto front = sweep_front(model_, test_, MetricConfig{});
  ASSERT_EQ(front.size(), 5u);
  for (std::size_t i = 0; i < front.size(); ++i) {
    EXPECT_EQ(front[i].pi, default_preference_grid()[i]);
    EXPECT_EQ(front[i].product, front[i].recall * front[i].od);
    EXPECT_EQ(front[i].n_clicks, make_examples(test_).size());
  }
}

TEST_F(FrontTest, ThreadCountDoesNotMatter) {
  const auto a = sweep_front(model_, test_, MetricConfig{}, 1);
  const auto b = sweep_front(model_, test_, MetricConfig{}, 3);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].recall, b[i].recall);
    EXPECT_EQ(a[i].od, b[i].od);
  }
}

TEST_F(FrontTest, CsvRoundTrip) {
  const auto front = sweep_front(model_, test_, MetricConfig{});
  const auto path = std::filesystem::temp_directory_path() / "paretoab_front_test.csv";
  write_front_csv(path, front);
  const auto back = read_front_csv(path);
  ASSERT_EQ(back.size(), front.size());
  for (std::size_t i = 0; i < front.size(); ++i) {
    EXPECT_EQ(back[i].pi, front[i].pi);
    EXPECT_EQ(back[i].recall, front[i].recall);
    EXPECT_EQ(back[i].od, front[i].od);
    EXPECT_EQ(back[i].product, front[i].product);
    EXPECT_EQ(back[i].n_clicks, front[i].n_clicks);
  }
  std::filesystem::remove(path);
}

TEST_F(FrontTest, CatalogMismatch) {
  test_.catalog_size = 61;
  EXPECT_THROW(sweep_front(model_, test_, MetricConfig{}), std::invalid_argument);
}

TEST(MetricConfig, Validation) {
  MetricConfig cfg;
  cfg.k = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = MetricConfig{};
  cfg.preferences = {PreferenceVector::click_weight(0.5), PreferenceVector::click_weight(0.5)};
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Spearman, Basics) {
  const std::vector<double> a{1, 2, 3, 4, 5};
  const std::vector<double> up{0.1, 0.2, 0.25, 0.3, 0.9};
  const std::vector<double> down{5, 4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(spearman(a, up), 1.0);
  EXPECT_DOUBLE_EQ(spearman(a, down), -1.0);
  // Ties take average ranks: b ranks (1.5, 1.5, 3, 4, 5).
  const std::vector<double> b{1, 1, 2, 3, 4};
  EXPECT_NEAR(spearman(a, b), 0.9746794344808963, 1e-12);
}

}  // namespace
}  // namespace paretoab
