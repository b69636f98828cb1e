#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "paretoab/losses.hpp"
#include "paretoab/model.hpp"
#include "paretoab/preference.hpp"

namespace paretoab {

struct OptimizerConfig {
  enum class Kind { kAdam, kSgd };

  Kind kind = Kind::kAdam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 128;

  void validate() const;
};

struct TrainConfig {
  LossConfig loss;
  DirichletParams dirichlet;
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;
};

struct EpochLog {
  std::uint32_t epoch = 0;  // 1-based, continues across resumes
  LossBreakdown mean;       // mean over the epoch's batches
};

struct TrainResult {
  Model model;
  std::vector<EpochLog> log;
};

/// Minimizes the preference-scalarized objective with one fresh Dirichlet
/// preference per batch. Deterministic given config.seed and start_epoch;
/// optimizer moments start from zero on every call.
TrainResult train(Model model, std::vector<Example> examples, const TrainConfig& cfg, int epochs,
                  std::uint32_t start_epoch = 0,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

/// One JSON record per epoch: epoch, l_click, l_order, l_reg, scalarized
/// (plus l_distortion when the distortion objective is active).
void write_train_log(std::ostream& out, const std::vector<EpochLog>& log, bool with_distortion);

}  // namespace paretoab
