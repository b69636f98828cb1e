#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "paretoab/losses.hpp"
#include "paretoab/metrics.hpp"
#include "paretoab/model.hpp"
#include "paretoab/train.hpp"
#include "paretoab/world.hpp"

namespace paretoab {

/// Invalid or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentSettings {
  std::size_t n_impressions = 250000;
  /// Empty means uniform shares over the preference grid.
  std::vector<double> shares;
  std::uint64_t salt = 0;
  int slate_size = 20;
  double affinity_scale = 1.0;
  double position_exponent = 1.0;
  /// Fixed click bias; when unset it is calibrated to target_ctr by a pilot run.
  std::optional<double> click_bias;
  double target_ctr = 0.05;
  std::size_t pilot_impressions = 20000;
};

struct Seeds {
  std::uint64_t world = 7;
  std::uint64_t train = 11;
  std::uint64_t experiment = 13;
};

struct RunConfig {
  WorldConfig world;
  std::size_t n_sessions = 50000;
  double train_fraction = 0.8;

  int embed_dim = 32;
  int hidden_dim = 64;
  int max_prefix_len = 20;
  double position_decay = 0.8;

  LossConfig loss;
  DirichletParams dirichlet;
  OptimizerConfig optimizer;
  int epochs = 10;

  MetricConfig metrics;
  ExperimentSettings experiment;
  Seeds seeds;
  double alpha = 0.05;

  int threads = 1;
  std::filesystem::path out_dir = "out";

  Hyperparams hyperparams() const;
  TrainConfig train_config() const;
  /// Throws ConfigError on any invalid sub-config.
  void validate() const;
};

/// The full configuration document (everything except out_dir and threads).
nlohmann::ordered_json to_json(const RunConfig& cfg);

/// Overlays `doc` on the defaults. Unknown keys and type mismatches against
/// config_schema() raise ConfigError.
RunConfig config_from_json(const nlohmann::json& doc);

RunConfig load_config(const std::filesystem::path& path);

/// JSON Schema (draft 2020-12 subset) describing the configuration document.
nlohmann::ordered_json config_schema();

/// Checks `doc` against `schema`; returns the first violation or an empty string.
std::string check_schema(const nlohmann::json& doc, const nlohmann::json& schema, const std::string& where = "$");

}  // namespace paretoab
