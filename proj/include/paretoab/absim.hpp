#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "paretoab/model.hpp"
#include "paretoab/preference.hpp"
#include "paretoab/random.hpp"
#include "paretoab/world.hpp"

namespace paretoab {

/// Hash-based traffic split into g groups with the given shares.
struct GroupAssignment {
  std::vector<double> shares = std::vector<double>(5, 0.2);
  std::uint64_t salt = 0;

  std::size_t groups() const { return shares.size(); }
  void validate() const;
  static GroupAssignment uniform(std::size_t g, std::uint64_t salt = 0);
};

/// Bucket of mix64(user_id, salt) / 2^64 under the cumulative shares.
std::size_t assign_group(std::uint64_t user_id, const GroupAssignment& ga);

/// Indices of the k largest scores in rank order; ties go to the smaller id.
std::vector<ItemId> top_k(const Eigen::Ref<const Eigen::VectorXd>& scores, int k);

/// Top-k recommendation for a session prefix under preference pi.
std::vector<ItemId> serve(const Model& model, const PreferenceVector& pi, std::span<const ItemId> prefix, int k);

/// Synthetic user: slot r of the slate is clicked with probability
/// sigmoid(scale * affinity(context, item) + bias) * (1 / log2(r + 1))^exponent,
/// scanning from the top until the first click.
struct ClickModel {
  double affinity_scale = 1.0;
  double bias = -4.0;
  double position_exponent = 1.0;

  double position_weight(int rank) const {
    return std::pow(1.0 / std::log2(static_cast<double>(rank) + 1.0), position_exponent);
  }
};

struct ImpressionOutcome {
  bool clicked = false;
  bool ordered = false;
  int units = 0;
  std::optional<ItemId> clicked_item;
};

template <typename G>
ImpressionOutcome simulate_impression(const World& world, const ClickModel& click, std::span<const ItemId> shown,
                                      ItemId context, G& gen) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ImpressionOutcome out;
  for (std::size_t r = 0; r < shown.size(); ++r) {
    const double z = click.affinity_scale * world.affinity(context, shown[r]) + click.bias;
    const double p = 1.0 / (1.0 + std::exp(-z)) * click.position_weight(static_cast<int>(r) + 1);
    if (unit(gen) < p) {
      out.clicked = true;
      out.clicked_item = shown[r];
      out.ordered = unit(gen) < world.convert[shown[r]];
      out.units = out.ordered ? 1 : 0;
      break;
    }
  }
  return out;
}

struct Impression {
  std::uint64_t impression_id = 0;
  std::uint64_t user_id = 0;
  std::uint32_t group = 0;
  double pi_click = 0.0;
  double pi_order = 0.0;
  bool clicked = false;
  bool ordered = false;
  int units = 0;

  bool operator==(const Impression&) const = default;
};

struct ExperimentConfig {
  GroupAssignment assignment;
  /// preferences[i] serves group i.
  std::vector<PreferenceVector> preferences = default_preference_grid();
  std::size_t n_impressions = 250000;
  int slate_size = 20;
  ClickModel click;

  void validate() const;
};

/// Top-k slates for every (group, single-item context). Serving contexts are
/// one World step, so this covers every request the simulator can issue.
class ServingTable {
 public:
  ServingTable(const Model& model, std::span<const PreferenceVector> preferences, int k, int threads = 1);

  std::span<const ItemId> slate(std::size_t group, ItemId context) const {
    const auto offset = (group * static_cast<std::size_t>(catalog_) + static_cast<std::size_t>(context)) * k_;
    return std::span<const ItemId>(slates_).subspan(offset, k_);
  }

 private:
  std::int64_t catalog_;
  std::size_t k_;
  std::vector<ItemId> slates_;
};

/// Impression i: user id, context (start item plus one Markov step) and
/// outcome all come from a stream seeded by derive_seed(seed, i).
std::vector<Impression> simulate_experiment(const World& world, const Model& model, const ExperimentConfig& cfg,
                                            std::uint64_t seed, int threads = 1);

/// Same, reusing a precomputed serving table.
std::vector<Impression> simulate_experiment(const World& world, const ServingTable& table,
                                            const ExperimentConfig& cfg, std::uint64_t seed, int threads = 1);

/// Bisection on ClickModel::bias so a pilot run reaches `target_ctr`.
/// Pilot draws are fixed across candidates, which keeps CTR monotone in the bias.
double calibrate_click_bias(const World& world, const ServingTable& table, const ExperimentConfig& cfg,
                            double target_ctr, std::uint64_t seed, std::size_t n_pilot = 20000);

struct GroupKpis {
  std::uint32_t group = 0;
  std::size_t n = 0;
  std::size_t clicks = 0;
  std::size_t orders = 0;
  double ctr = 0.0;
  std::optional<double> cvr;  // empty when the group has no clicks
  std::int64_t units_total = 0;
};

/// Per-group aggregates for groups present in the log, sorted by group.
/// Groups in [0, expected_groups) without impressions are skipped with a
/// warning on stderr.
std::vector<GroupKpis> aggregate_kpis(std::span<const Impression> log, std::size_t expected_groups = 0);

// CSV: impression_id,user_id,group,pi_click,pi_order,clicked,ordered,units
void write_impressions_csv(std::ostream& out, std::span<const Impression> log);
void write_impressions_csv(const std::filesystem::path& path, std::span<const Impression> log);
std::vector<Impression> read_impressions_csv(const std::filesystem::path& path);

}  // namespace paretoab
