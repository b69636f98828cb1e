#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "gradient_check.hpp"
#include "paretoab/checkpoint.hpp"
#include "paretoab/train.hpp"
#include "paretoab/world.hpp"

namespace paretoab {
namespace {

using testing::gradient_relative_error;
using testing::random_instance;

TEST(Gradient, OrderObjective) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto inst = random_instance(seed);
    EXPECT_LT(gradient_relative_error(inst), 1e-4) << "seed " << seed;
  }
}

TEST(Gradient, DistortionObjective) {
  for (std::uint64_t seed = 11; seed <= 20; ++seed) {
    auto inst = random_instance(seed);
    inst.loss.use_distortion = true;
    EXPECT_LT(gradient_relative_error(inst), 1e-4) << "seed " << seed;
  }
}

TEST(Gradient, WithoutRegularizer) {
  auto inst = random_instance(21);
  inst.loss.lambda = 0.0;
  EXPECT_LT(gradient_relative_error(inst), 1e-4);
}

// Negatives are redrawn from the same seed on every evaluation, so the
// sampled objective is a smooth function of the parameters.
TEST(Gradient, SampledSoftmax) {
  for (std::uint64_t seed = 30; seed < 35; ++seed) {
    auto inst = random_instance(seed);
    inst.loss.exact_softmax_threshold = 5;
    inst.loss.n_negatives = 6;
    EXPECT_LT(gradient_relative_error(inst), 1e-4) << "seed " << seed;
  }
}

TEST(Gradient, RegularizerAgainstDifferences) {
  Rng gen(4);
  std::uniform_real_distribution<double> loss(0.05, 5.0);
  for (int rep = 0; rep < 50; ++rep) {
    const PreferenceVector pi = sample_preference(DirichletParams{}, gen);
    const Eigen::VectorXd l = Eigen::Vector2d(loss(gen), loss(gen));
    const Eigen::VectorXd g = nonuniformity_reg_gradient(pi, l);
    for (Eigen::Index k = 0; k < 2; ++k) {
      Eigen::VectorXd up = l, down = l;
      up[k] += 1e-6;
      down[k] -= 1e-6;
      const double fd = (nonuniformity_reg(pi, up) - nonuniformity_reg(pi, down)) / 2e-6;
      EXPECT_NEAR(g[k], fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(Model, InitIsDeterministic) {
  Hyperparams hp;
  hp.catalog_size = 30;
  hp.seed = 5;
  EXPECT_EQ(init_model(hp), init_model(hp));
  Hyperparams other = hp;
  other.seed = 6;
  EXPECT_FALSE(init_model(hp) == init_model(other));
}

TEST(Model, RejectsBadHyperparams) {
  Hyperparams hp;
  hp.catalog_size = 10;
  hp.embed_dim = 0;
  EXPECT_THROW(init_model(hp), std::invalid_argument);
}

TEST(Model, PrefixTruncationKeepsRecentItems) {
  Hyperparams hp;
  hp.catalog_size = 10;
  hp.max_prefix_len = 2;
  const Model m = init_model(hp);
  const PreferenceVector pi = PreferenceVector::click_weight(0.3);
  const std::vector<ItemId> full{1, 2, 3, 4};
  const std::vector<ItemId> tail{3, 4};
  EXPECT_EQ(encode_session(m, std::span<const ItemId>(full), pi), encode_session(m, std::span<const ItemId>(tail), pi));
}

TEST(Model, PreferenceChangesScores) {
  Hyperparams hp;
  hp.catalog_size = 10;
  const Model m = init_model(hp);
  const std::vector<ItemId> prefix{1, 2};
  const auto a = encode_session(m, std::span<const ItemId>(prefix), PreferenceVector::click_weight(0.1));
  const auto b = encode_session(m, std::span<const ItemId>(prefix), PreferenceVector::click_weight(0.9));
  EXPECT_GT((click_scores(m, a) - click_scores(m, b)).norm(), 0.0);
  EXPECT_EQ(order_logits(m, a).size(), 10);
}

TEST(Model, SinglePrecisionInstantiates) {
  Hyperparams hp;
  hp.catalog_size = 12;
  hp.embed_dim = 3;
  const ModelParams<float> m = init_model<float>(hp);
  std::vector<Example> batch{{{1, 2}, 3, true}, {{4}, 5, false}};
  Rng gen(1);
  const auto [loss, grad] = backward(m, batch, PreferenceVector::click_weight(0.4), LossConfig{}, gen);
  EXPECT_TRUE(std::isfinite(loss.scalarized));
  EXPECT_EQ(grad.item_embed.rows(), 12);
}

TEST(Model, MakeExamples) {
  Dataset d;
  d.catalog_size = 10;
  d.sessions.push_back({0, 0, {{1, false}, {2, true}, {3, false}}});
  const auto ex = make_examples(d);
  ASSERT_EQ(ex.size(), 2u);
  EXPECT_EQ(ex[0].prefix, (std::vector<ItemId>{1}));
  EXPECT_EQ(ex[0].target, 2);
  EXPECT_TRUE(ex[0].ordered);
  EXPECT_EQ(ex[1].prefix, (std::vector<ItemId>{1, 2}));
  EXPECT_EQ(ex[1].target, 3);
}

TEST(Checkpoint, RoundTrip) {
  Hyperparams hp;
  hp.catalog_size = 40;
  hp.seed = 9;
  Checkpoint ck{init_model(hp), 7};
  ck.model.order_b = -0.25;
  const auto path = std::filesystem::temp_directory_path() / "paretoab_ckpt_test.bin";
  save_checkpoint(ck, path);
  const Checkpoint back = load_checkpoint(path);
  EXPECT_EQ(back.model, ck.model);
  EXPECT_EQ(back.epochs_completed, 7u);
  std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsCorruption) {
  Hyperparams hp;
  hp.catalog_size = 20;
  const auto path = std::filesystem::temp_directory_path() / "paretoab_ckpt_bad.bin";
  save_checkpoint({init_model(hp), 0}, path);
  const auto size = std::filesystem::file_size(path);

  std::filesystem::resize_file(path, size - 9);
  EXPECT_THROW(load_checkpoint(path), std::runtime_error);

  {
    std::ofstream out(path, std::ios::binary);
    out << "XXXX0000";
  }
  try {
    load_checkpoint(path);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("magic"), std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST(Checkpoint, CatalogMismatch) {
  Hyperparams hp;
  hp.catalog_size = 20;
  EXPECT_THROW(require_catalog(init_model(hp), 21), std::invalid_argument);
  EXPECT_NO_THROW(require_catalog(init_model(hp), 20));
}

class TrainingTest : public ::testing::Test {
 protected:
  void SetUp() override {
    WorldConfig wc;
    wc.catalog_size = 100;
    world_ = generate_world(wc, 3);
    examples_ = make_examples(sample_sessions(world_, 2000, 4));
    hp_.catalog_size = 100;
    hp_.embed_dim = 16;
    hp_.hidden_dim = 16;
    hp_.seed = 5;
    cfg_.seed = 6;
    cfg_.optimizer.learning_rate = 3e-3;
  }

  double fixed_loss(const Model& m) const {
    Rng gen(0);
    return backward(m, std::span<const Example>(examples_), PreferenceVector::click_weight(0.5), cfg_.loss, gen)
        .first.scalarized;
  }

  World world_;
  std::vector<Example> examples_;
  Hyperparams hp_;
  TrainConfig cfg_;
};

TEST_F(TrainingTest, LossDecreases) {
  const Model start = init_model(hp_);
  const TrainResult r = train(start, examples_, cfg_, 10);
  ASSERT_EQ(r.log.size(), 10u);
  EXPECT_EQ(r.log.front().epoch, 1u);
  EXPECT_EQ(r.log.back().epoch, 10u);
  EXPECT_LT(r.log.back().mean.scalarized, r.log.front().mean.scalarized);
  EXPECT_LT(r.log.back().mean.l_click, r.log.front().mean.l_click);
  EXPECT_LT(fixed_loss(r.model), fixed_loss(start));
}

TEST_F(TrainingTest, ZeroEpochsIsIdentity) {
  const Model start = init_model(hp_);
  const TrainResult r = train(start, examples_, cfg_, 0);
  EXPECT_EQ(r.model, start);
  EXPECT_TRUE(r.log.empty());
}

TEST_F(TrainingTest, Deterministic) {
  const TrainResult a = train(init_model(hp_), examples_, cfg_, 2);
  const TrainResult b = train(init_model(hp_), examples_, cfg_, 2);
  EXPECT_EQ(a.model, b.model);
}

TEST_F(TrainingTest, ResumeContinuesNumbering) {
  const TrainResult first = train(init_model(hp_), examples_, cfg_, 2);
  const TrainResult second = train(first.model, examples_, cfg_, 3, 2);
  ASSERT_EQ(second.log.size(), 3u);
  EXPECT_EQ(second.log.front().epoch, 3u);
  EXPECT_EQ(second.log.back().epoch, 5u);
}

TEST_F(TrainingTest, SgdRuns) {
  cfg_.optimizer.kind = OptimizerConfig::Kind::kSgd;
  cfg_.optimizer.learning_rate = 0.5;
  const Model start = init_model(hp_);
  EXPECT_LT(fixed_loss(train(start, examples_, cfg_, 3).model), fixed_loss(start));
}

TEST_F(TrainingTest, DivergenceNamesEpoch) {
  Model bad = init_model(hp_);
  bad.item_embed.setConstant(std::numeric_limits<double>::infinity());
  try {
    train(bad, examples_, cfg_, 1);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1"), std::string::npos);
  }
}

TEST(TrainLog, RecordFields) {
  std::ostringstream out;
  write_train_log(out, {{3, {6.5, 0.4, 0.0, 0.01, 3.2}}}, false);
  EXPECT_EQ(out.str(), "{\"epoch\":3,\"l_click\":6.5,\"l_order\":0.4,\"l_reg\":0.01,\"scalarized\":3.2}\n");
}

}  // namespace
}  // namespace paretoab
