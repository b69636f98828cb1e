#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "paretoab/random.hpp"
#include "paretoab/session.hpp"

namespace paretoab {

/// Ground-truth generator settings. Item attractiveness and conversion are
/// log-normal / logit-normal with a controlled correlation between
/// log(attract) and logit(convert).
struct WorldConfig {
  std::int64_t catalog_size = 1000;
  int latent_dim = 8;
  double latent_scale = 0.5;
  double attract_log_std = 1.0;
  double convert_logit_mean = -1.6;
  double convert_logit_std = 1.0;
  double attract_convert_corr = -0.5;
  double mean_session_length = 5.0;

  void validate() const;
};

struct World {
  using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  WorldConfig config;
  std::uint64_t seed = 0;
  Eigen::VectorXd attract;  // > 0
  Eigen::VectorXd convert;  // in (0, 1)
  Matrix latent;            // catalog_size x latent_dim
  double measured_corr = 0.0;

  std::int64_t catalog_size() const { return attract.size(); }

  /// log attract[j] + latent[from] . latent[j]; the log of the unnormalized
  /// transition weight from `from` to `j`.
  double affinity(ItemId from, ItemId j) const {
    return std::log(attract[j]) + latent.row(from).dot(latent.row(j));
  }

  bool operator==(const World& o) const;
};

World generate_world(const WorldConfig& cfg, std::uint64_t seed);

/// Pearson correlation between log(attract) and logit(convert).
double attract_convert_correlation(const World& w);

/// Draws start items (proportional to attract) and Markov steps
/// (proportional to exp(affinity)). Catalogs up to `kDenseLimit` items get a
/// precomputed c x c CDF table; larger ones are evaluated per step.
class TransitionSampler {
 public:
  static constexpr std::int64_t kDenseLimit = 2048;

  explicit TransitionSampler(const World& w);

  template <typename G>
  ItemId start(G& gen) const {
    return pick(start_cdf_, uniform(gen));
  }

  template <typename G>
  ItemId step(ItemId from, G& gen) const {
    const double u = uniform(gen);
    if (!dense_.empty()) {
      const std::size_t c = static_cast<std::size_t>(world_->catalog_size());
      return pick(std::span<const double>(dense_).subspan(static_cast<std::size_t>(from) * c, c), u);
    }
    return pick(row_cdf(from), u);
  }

 private:
  template <typename G>
  static double uniform(G& gen) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(gen);
  }
  static ItemId pick(std::span<const double> cdf, double u);
  std::vector<double> row_cdf(ItemId from) const;

  const World* world_;
  std::vector<double> start_cdf_;
  std::vector<double> dense_;
};

/// Samples `n_sessions` sessions. Lengths are 2 + Geometric with the
/// configured mean, capped at 50; timestamps advance by one per event across
/// the whole dataset so later sessions start later.
Dataset sample_sessions(const World& w, std::size_t n_sessions, std::uint64_t seed);

void save_world(const World& w, const std::filesystem::path& path);
World load_world(const std::filesystem::path& path);

}  // namespace paretoab
