#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "paretoab/config.hpp"
#include "paretoab/stats.hpp"

namespace paretoab {

/// File layout of one run directory.
struct Artifacts {
  std::filesystem::path dir;

  std::filesystem::path train_data() const { return dir / "train.jsonl"; }
  std::filesystem::path test_data() const { return dir / "test.jsonl"; }
  std::filesystem::path world() const { return dir / "world.json"; }
  std::filesystem::path checkpoint() const { return dir / "model.ckpt"; }
  std::filesystem::path train_log() const { return dir / "train_log.jsonl"; }
  std::filesystem::path front() const { return dir / "front.csv"; }
  std::filesystem::path impressions() const { return dir / "impressions.csv"; }
  std::filesystem::path simulation() const { return dir / "simulation.json"; }
  std::filesystem::path report_csv() const { return dir / "report.csv"; }
  std::filesystem::path report_txt() const { return dir / "report.txt"; }
  std::filesystem::path scatter_csv() const { return dir / "scatter.csv"; }
  std::filesystem::path figure(const std::string& hypothesis) const { return dir / ("figure_" + hypothesis + ".svg"); }
  std::filesystem::path config() const { return dir / "config.json"; }
};

/// A pipeline stage failed; earlier outputs are left in place.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error("stage " + stage + " failed: " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Experiment settings for serving group i with metrics.preferences[i].
ExperimentConfig experiment_config(const RunConfig& cfg);

/// World, sampled sessions and their temporal split. The split point is the
/// train_fraction quantile of session start times.
void cmd_generate(const RunConfig& cfg, std::ostream& log);

/// Trains for cfg.epochs epochs. With `resume`, continues from the existing
/// checkpoint, appends to the training log and keeps the epoch numbering.
void cmd_train(const RunConfig& cfg, bool resume, std::ostream& log);

std::vector<FrontPoint> cmd_eval_offline(const RunConfig& cfg, std::ostream& log);

/// Serves group i with metrics.preferences[i]. The click bias is calibrated
/// to experiment.target_ctr unless fixed in the config.
void cmd_simulate(const RunConfig& cfg, std::ostream& log);

std::vector<HypothesisRow> cmd_analyze(const RunConfig& cfg, std::ostream& log);

/// All stages in order. A failure is rethrown as StageError.
void cmd_pipeline(const RunConfig& cfg, std::ostream& log);

}  // namespace paretoab
