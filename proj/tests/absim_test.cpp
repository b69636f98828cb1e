#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numeric>

#include "paretoab/absim.hpp"

namespace paretoab {
namespace {

TEST(AssignGroup, Stable) {
  const GroupAssignment ga = GroupAssignment::uniform(5, 77);
  for (std::uint64_t u = 0; u < 1000; ++u) EXPECT_EQ(assign_group(u, ga), assign_group(u, ga));
}

TEST(AssignGroup, UniformShares) {
  const GroupAssignment ga = GroupAssignment::uniform(5, 3);
  std::vector<double> counts(5, 0.0);
  Rng gen(1);
  constexpr int n = 1000000;
  for (int i = 0; i < n; ++i) counts[assign_group(gen(), ga)] += 1;
  for (double c : counts) EXPECT_NEAR(c / n, 0.2, 0.005);
}

TEST(AssignGroup, DegenerateShares) {
  const GroupAssignment ga{{1.0, 0.0, 0.0, 0.0, 0.0}, 0};
  for (std::uint64_t u = 0; u < 1000; ++u) EXPECT_EQ(assign_group(mix64(u), ga), 0u);
}

TEST(AssignGroup, SaltReshuffles) {
  const GroupAssignment a = GroupAssignment::uniform(5, 1);
  const GroupAssignment b = GroupAssignment::uniform(5, 2);
  int same = 0;
  for (std::uint64_t u = 0; u < 10000; ++u) same += assign_group(u, a) == assign_group(u, b);
  EXPECT_NEAR(same / 10000.0, 0.2, 0.03);
}

TEST(GroupAssignment, Validation) {
  EXPECT_THROW((GroupAssignment{{0.5, 0.4}, 0}).validate(), std::invalid_argument);
  EXPECT_THROW((GroupAssignment{{1.2, -0.2}, 0}).validate(), std::invalid_argument);
  EXPECT_NO_THROW((GroupAssignment{{0.5, 0.5}, 0}).validate());
}

TEST(TopK, ArgmaxAndTies) {
  const Eigen::VectorXd s = (Eigen::VectorXd(5) << 1, 4, 4, 0, 2).finished();
  EXPECT_EQ(top_k(s, 1), (std::vector<ItemId>{1}));
  EXPECT_EQ(top_k(s, 3), (std::vector<ItemId>{1, 2, 4}));
  std::vector<ItemId> all = top_k(s, 5);
  EXPECT_EQ(all, (std::vector<ItemId>{1, 2, 4, 0, 3}));
  EXPECT_EQ(top_k(s, 9).size(), 5u);
}

// Full stable sort by (-score, id) is the oracle.
TEST(TopK, MatchesFullSort) {
  Rng gen(2);
  for (int rep = 0; rep < 300; ++rep) {
    const int c = std::uniform_int_distribution<int>(1, 40)(gen);
    Eigen::VectorXd s(c);
    for (int j = 0; j < c; ++j) s[j] = std::uniform_int_distribution<int>(0, 5)(gen);
    std::vector<ItemId> order(static_cast<std::size_t>(c));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](ItemId a, ItemId b) { return s[a] > s[b]; });
    const int k = std::uniform_int_distribution<int>(1, c)(gen);
    order.resize(static_cast<std::size_t>(k));
    EXPECT_EQ(top_k(s, k), order);
  }
}

class SimulationTest : public ::testing::Test {
 protected:
  void SetUp() override {
    WorldConfig wc;
    wc.catalog_size = 80;
    world_ = generate_world(wc, 5);
    Hyperparams hp;
    hp.catalog_size = 80;
    hp.embed_dim = 8;
    hp.hidden_dim = 8;
    hp.seed = 1;
    model_ = init_model(hp);
    cfg_.n_impressions = 20000;
    cfg_.slate_size = 10;
  }

  World world_;
  Model model_;
  ExperimentConfig cfg_;
};

TEST_F(SimulationTest, ServeMatchesScores) {
  const std::vector<ItemId> prefix{3};
  const PreferenceVector pi = PreferenceVector::click_weight(0.7);
  const Eigen::VectorXd s = click_scores(model_, encode_session(model_, std::span<const ItemId>(prefix), pi));
  EXPECT_EQ(serve(model_, pi, prefix, 10), top_k(s, 10));
  auto perm = serve(model_, pi, prefix, 80);
  std::sort(perm.begin(), perm.end());
  for (ItemId j = 0; j < 80; ++j) EXPECT_EQ(perm[static_cast<std::size_t>(j)], j);
}

TEST_F(SimulationTest, TableMatchesServe) {
  const ServingTable table(model_, cfg_.preferences, cfg_.slate_size);
  for (std::size_t g = 0; g < cfg_.preferences.size(); ++g) {
    for (ItemId ctx = 0; ctx < 80; ctx += 7) {
      const std::vector<ItemId> prefix{ctx};
      const auto slate = table.slate(g, ctx);
      EXPECT_EQ(std::vector<ItemId>(slate.begin(), slate.end()), serve(model_, cfg_.preferences[g], prefix, 10));
    }
  }
}

TEST_F(SimulationTest, ConvertZeroNeverOrders) {
  world_.convert.setZero();
  cfg_.click.bias = 0.0;
  for (const Impression& imp : simulate_experiment(world_, model_, cfg_, 3)) EXPECT_FALSE(imp.ordered);
}

TEST_F(SimulationTest, HopelessAffinityNeverClicks) {
  world_.attract.setConstant(1e-300);
  for (const Impression& imp : simulate_experiment(world_, model_, cfg_, 3)) EXPECT_FALSE(imp.clicked);
}

TEST_F(SimulationTest, FirstSlotWinsWhenCertain) {
  ClickModel click;
  click.bias = 1e6;
  std::vector<ItemId> shown{4, 5, 6};
  Rng gen(1);
  const auto out = simulate_impression(world_, click, std::span<const ItemId>(shown), 0, gen);
  ASSERT_TRUE(out.clicked_item.has_value());
  EXPECT_EQ(*out.clicked_item, 4);
}

TEST_F(SimulationTest, PositionWeight) {
  ClickModel click;
  EXPECT_DOUBLE_EQ(click.position_weight(1), 1.0);
  EXPECT_DOUBLE_EQ(click.position_weight(3), 0.5);
  click.position_exponent = 2.0;
  EXPECT_DOUBLE_EQ(click.position_weight(3), 0.25);
}

TEST_F(SimulationTest, LogInvariants) {
  cfg_.click.bias = -1.0;
  const auto log = simulate_experiment(world_, model_, cfg_, 9);
  ASSERT_EQ(log.size(), cfg_.n_impressions);
  std::vector<std::size_t> n(5, 0);
  for (std::size_t i = 0; i < log.size(); ++i) {
    const Impression& imp = log[i];
    EXPECT_EQ(imp.impression_id, i);
    EXPECT_TRUE(!imp.ordered || imp.clicked);
    EXPECT_EQ(imp.units, imp.ordered ? 1 : 0);
    EXPECT_EQ(imp.group, assign_group(imp.user_id, cfg_.assignment));
    EXPECT_EQ(imp.pi_click, cfg_.preferences[imp.group][0]);
    ++n[imp.group];
  }
  // Binomial 3 sigma around 4000.
  for (std::size_t c : n) EXPECT_NEAR(static_cast<double>(c), 4000.0, 3 * std::sqrt(20000 * 0.2 * 0.8));
}

TEST_F(SimulationTest, GroupSizesAtScale) {
  cfg_.n_impressions = 100000;
  const auto log = simulate_experiment(world_, model_, cfg_, 4);
  std::vector<double> n(5, 0);
  for (const Impression& imp : log) n[imp.group] += 1;
  for (double c : n) EXPECT_NEAR(c, 20000.0, 700.0);
}

TEST_F(SimulationTest, DeterministicAcrossThreads) {
  const ServingTable table(model_, cfg_.preferences, cfg_.slate_size);
  const auto a = simulate_experiment(world_, table, cfg_, 11, 1);
  const auto b = simulate_experiment(world_, table, cfg_, 11, 3);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, simulate_experiment(world_, table, cfg_, 12, 1));
}

TEST_F(SimulationTest, GroupsIndependentOfPreferences) {
  const auto a = simulate_experiment(world_, model_, cfg_, 11);
  cfg_.preferences.assign(5, PreferenceVector::click_weight(0.5));
  const auto b = simulate_experiment(world_, model_, cfg_, 11);
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].user_id, b[i].user_id);
    ASSERT_EQ(a[i].group, b[i].group);
  }
}

TEST_F(SimulationTest, CalibrationHitsTargetCtr) {
  const ServingTable table(model_, cfg_.preferences, cfg_.slate_size);
  cfg_.click.bias = calibrate_click_bias(world_, table, cfg_, 0.05, 21, 20000);
  cfg_.n_impressions = 100000;
  const auto kpis = aggregate_kpis(simulate_experiment(world_, table, cfg_, 22));
  std::size_t clicks = 0, n = 0;
  for (const auto& k : kpis) {
    clicks += k.clicks;
    n += k.n;
  }
  const double ctr = static_cast<double>(clicks) / static_cast<double>(n);
  EXPECT_GE(ctr, 0.03);
  EXPECT_LE(ctr, 0.07);
}

// Identical preferences: group CTRs are homogeneous (Pearson chi-square, 4 dof).
TEST_F(SimulationTest, AaGroupsHomogeneous) {
  cfg_.preferences.assign(5, PreferenceVector::click_weight(0.5));
  cfg_.click.bias = -2.0;
  cfg_.n_impressions = 100000;
  const auto kpis = aggregate_kpis(simulate_experiment(world_, model_, cfg_, 5));
  double clicks = 0, n = 0;
  for (const auto& k : kpis) {
    clicks += static_cast<double>(k.clicks);
    n += static_cast<double>(k.n);
  }
  const double p = clicks / n;
  double chi2 = 0;
  for (const auto& k : kpis) {
    const double expected = p * static_cast<double>(k.n);
    const double d = static_cast<double>(k.clicks) - expected;
    chi2 += d * d / expected + d * d / (static_cast<double>(k.n) - expected);
  }
  // 0.99 quantile of chi-square with 4 degrees of freedom.
  EXPECT_LT(chi2, 13.2767);
}

TEST(AggregateKpis, Examples) {
  std::vector<Impression> log(4);
  log[0].clicked = true;
  log[2].clicked = true;
  log[2].ordered = true;
  log[2].units = 1;
  auto k = aggregate_kpis(log);
  ASSERT_EQ(k.size(), 1u);
  EXPECT_EQ(k[0].ctr, 0.5);
  EXPECT_EQ(*k[0].cvr, 0.5);
  EXPECT_EQ(k[0].units_total, 1);

  std::vector<Impression> none(3);
  none[1].group = 1;
  k = aggregate_kpis(none, 3);
  ASSERT_EQ(k.size(), 2u);
  EXPECT_FALSE(k[0].cvr.has_value());
  EXPECT_EQ(k[1].group, 1u);
  EXPECT_EQ(k[0].ctr, 0.0);
}

TEST(ImpressionCsv, RoundTripAndRejects) {
  std::vector<Impression> log{{0, 12345678901234ULL, 2, 0.5, 0.5, true, true, 1},
                              {1, 7, 0, 0.1, 0.9, true, false, 0},
                              {2, 8, 4, 0.9, 0.1, false, false, 0}};
  const auto path = std::filesystem::temp_directory_path() / "paretoab_impressions_test.csv";
  write_impressions_csv(path, log);
  EXPECT_EQ(read_impressions_csv(path), log);
  {
    std::ofstream out(path);
    out << "impression_id,user_id,group,pi_click,pi_order,clicked,ordered,units\n0,1,0,0.5,0.5,0,1,1\n";
  }
  EXPECT_THROW(read_impressions_csv(path), std::runtime_error);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace paretoab
