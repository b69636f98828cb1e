#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "paretoab/losses.hpp"
#include "paretoab/preference.hpp"

namespace paretoab {
namespace {

TEST(Preference, Validation) {
  EXPECT_NO_THROW(PreferenceVector({0.3, 0.7}));
  EXPECT_THROW(PreferenceVector({0.3, 0.6}), std::invalid_argument);
  EXPECT_THROW(PreferenceVector({-0.1, 1.1}), std::invalid_argument);
  EXPECT_EQ(PreferenceVector::click_weight(0.25)[1], 0.75);
}

TEST(Dirichlet, DrawsOnClippedSimplex) {
  Rng gen(1);
  for (int i = 0; i < 10000; ++i) {
    const PreferenceVector pi = sample_preference(DirichletParams{}, gen);
    EXPECT_NEAR(pi.weights().sum(), 1.0, 1e-12);
    EXPECT_GE(pi.weights().minCoeff(), kPreferenceClip - 1e-15);
  }
}

TEST(Dirichlet, MeanOfSymmetricDraws) {
  Rng gen(2);
  double sum = 0;
  constexpr int n = 100000;
  for (int i = 0; i < n; ++i) sum += sample_preference(DirichletParams{}, gen)[0];
  EXPECT_NEAR(sum / n, 0.5, 0.005);
}

TEST(Dirichlet, ConcentratesForLargeBeta) {
  Rng gen(3);
  DirichletParams params;
  params.beta = Eigen::Vector2d(100, 100);
  double s = 0, ss = 0;
  constexpr int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double v = sample_preference(params, gen)[0];
    s += v;
    ss += v * v;
  }
  const double var = ss / n - (s / n) * (s / n);
  // Beta(100, 100): variance 0.25 / 201.
  EXPECT_LT(std::sqrt(var), 0.05);
  EXPECT_NEAR(var, 0.25 / 201, 0.25 / 201 * 0.05);
}

TEST(Dirichlet, RejectsBadBeta) {
  DirichletParams params;
  params.beta = Eigen::Vector2d(0.5, 0.0);
  Rng gen(1);
  EXPECT_THROW(sample_preference(params, gen), std::invalid_argument);
}

TEST(ClickLoss, UniformScores) {
  Rng gen(1);
  const Eigen::VectorXd s = Eigen::VectorXd::Constant(50, 0.3);
  EXPECT_NEAR(click_loss(s, 7, LossConfig{}, gen), std::log(50.0), 1e-12);
}

TEST(ClickLoss, DominantTarget) {
  Rng gen(1);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(10);
  s[4] = 60;
  EXPECT_LT(click_loss(s, 4, LossConfig{}, gen), 1e-20);
}

TEST(ClickLoss, MatchesDirectSummation) {
  Rng gen(5);
  std::normal_distribution<double> normal(0.0, 2.0);
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::VectorXd s(10);
    for (Eigen::Index j = 0; j < 10; ++j) s[j] = normal(gen);
    const ItemId t = rep % 10;
    double z = 0;
    for (Eigen::Index j = 0; j < 10; ++j) z += std::exp(s[j]);
    EXPECT_NEAR(click_loss(s, t, LossConfig{}, gen), -std::log(std::exp(s[t]) / z), 1e-12);
  }
}

// With the log((c-1)/n) correction, uniform scores give ln c whatever the
// negatives drawn.
TEST(ClickLoss, SampledCorrectionAtUniform) {
  LossConfig cfg;
  cfg.exact_softmax_threshold = 10;
  cfg.n_negatives = 16;
  Rng gen(9);
  const Eigen::VectorXd s = Eigen::VectorXd::Zero(4000);
  EXPECT_NEAR(click_loss(s, 17, cfg, gen), std::log(4000.0), 1e-9);
}

TEST(ClickLoss, TargetOutsideCatalog) {
  Rng gen(1);
  EXPECT_THROW(click_loss(Eigen::VectorXd::Zero(5), 5, LossConfig{}, gen), std::out_of_range);
}

TEST(OrderLoss, Examples) {
  EXPECT_NEAR(order_loss(0.0, true), std::numbers::ln2, 1e-15);
  EXPECT_NEAR(order_loss(0.0, false), std::numbers::ln2, 1e-15);
  EXPECT_NEAR(order_loss(10.0, true), -std::log(1.0 / (1.0 + std::exp(-10.0))), 1e-15);
  EXPECT_NEAR(order_loss(10.0, true), 4.54e-5, 1e-7);
  EXPECT_NEAR(order_loss(-800.0, true), 800.0, 1e-9);
  EXPECT_NEAR(order_loss(800.0, false), 800.0, 1e-9);
}

TEST(DistortionLoss, UniformFixedPoint) {
  for (int c : {2, 3, 20, 1000}) {
    EXPECT_NEAR(distortion_loss(Eigen::VectorXd::Constant(c, -1.7)), std::log(static_cast<double>(c)), 1e-12);
  }
}

TEST(DistortionLoss, GrowsWithGap) {
  double last = distortion_loss(Eigen::Vector2d(0.4, 0.4));
  for (double delta : {0.1, 0.5, 1.0, 3.0}) {
    const double v = distortion_loss(Eigen::Vector2d(0.4, 0.4 + delta));
    EXPECT_GT(v, last);
    EXPECT_NEAR(v, distortion_loss(Eigen::Vector2d(0.4, 0.4 - delta)), 1e-12);
    last = v;
  }
}

TEST(DistortionLoss, ThreeClasses) {
  const double z = 2 + std::exp(5.0);
  const double expected = -(std::log(1 / z) * 2 + std::log(std::exp(5.0) / z)) / 3;
  EXPECT_NEAR(distortion_loss(Eigen::Vector3d(0, 0, 5)), expected, 1e-12);
}

TEST(Regularizer, Examples) {
  const PreferenceVector half({0.5, 0.5});
  EXPECT_NEAR(nonuniformity_reg(half, Eigen::Vector2d(2, 2)), 0.0, 1e-15);
  EXPECT_NEAR(nonuniformity_reg(PreferenceVector({0.25, 0.75}), Eigen::Vector2d(3, 1)), 0.0, 1e-15);
  EXPECT_NEAR(nonuniformity_reg(half, Eigen::Vector2d(1, 0)), std::numbers::ln2, 1e-15);
  EXPECT_NEAR(nonuniformity_reg(half, Eigen::Vector2d(3, 1)), 0.75 * std::log(1.5) + 0.25 * std::log(0.5), 1e-15);
  EXPECT_NEAR(nonuniformity_reg(half, Eigen::Vector2d(3, 1)), 0.1308, 5e-5);
  EXPECT_EQ(nonuniformity_reg(half, Eigen::Vector2d(0, 0)), 0.0);
}

TEST(Scalarized, Examples) {
  LossConfig cfg;
  cfg.lambda = 0;
  LossTerms t{1.0, 1.0, 0.0};
  EXPECT_NEAR(scalarized_loss(t, PreferenceVector({0.5, 0.5}), cfg).scalarized, 1.0, 1e-15);

  t = {3.0, 1.0, 0.0};
  const PreferenceVector edge({1 - kPreferenceClip, kPreferenceClip});
  EXPECT_NEAR(scalarized_loss(t, edge, cfg).scalarized, 3.0, 1e-3);

  cfg.lambda = 1;
  const LossBreakdown b = scalarized_loss(t, PreferenceVector({0.5, 0.5}), cfg);
  EXPECT_NEAR(b.scalarized, 2.1308, 5e-5);
  EXPECT_NEAR(b.l_reg, 0.1308, 5e-5);
  EXPECT_EQ(b.l_click, 3.0);
  EXPECT_EQ(b.l_order, 1.0);
}

TEST(Scalarized, DistortionModeUsesDistortion) {
  LossConfig cfg;
  cfg.lambda = 0;
  cfg.use_distortion = true;
  const LossTerms t{2.0, 100.0, 4.0};
  EXPECT_NEAR(scalarized_loss(t, PreferenceVector({0.5, 0.5}), cfg).scalarized, 3.0, 1e-15);
}

TEST(Scalarized, RejectsWrongDimension) {
  EXPECT_THROW(scalarized_loss(LossTerms{}, PreferenceVector({0.2, 0.3, 0.5}), LossConfig{}), std::invalid_argument);
}

TEST(LossConfig, Validation) {
  LossConfig cfg;
  cfg.lambda = -1;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = LossConfig{};
  cfg.n_negatives = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace paretoab
