#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "paretoab/checkpoint.hpp"
#include "paretoab/model.hpp"
#include "paretoab/preference.hpp"
#include "paretoab/session.hpp"

namespace paretoab {

/// Thrown when a ratio metric has an empty denominator (e.g. no click ranked
/// within the cutoff for OD@K). Distinct from a value of zero.
class UndefinedMetric : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct MetricConfig {
  int k = 20;
  std::vector<PreferenceVector> preferences = default_preference_grid();

  void validate() const;
};

struct FrontPoint {
  PreferenceVector pi;
  double recall = 0.0;
  double od = 0.0;
  double product = 0.0;
  std::size_t n_clicks = 0;
};

/// 1 + #{items scoring strictly higher} + #{lower-id items scoring equal}.
template <typename Derived>
std::int64_t rank_of_target(const Eigen::MatrixBase<Derived>& scores, ItemId target) {
  if (target < 0 || target >= scores.size()) throw std::out_of_range("rank_of_target: target outside catalog");
  const auto s = scores(target);
  std::int64_t rank = 1;
  for (Eigen::Index j = 0; j < scores.size(); ++j) {
    if (scores(j) > s || (scores(j) == s && j < target)) ++rank;
  }
  return rank;
}

struct RankedClick {
  std::int64_t rank = 0;
  bool ordered = false;
};

/// Ranks every instance's target under R(., pi).
std::vector<RankedClick> rank_clicks(const Model& model, std::span<const Example> instances,
                                     const PreferenceVector& pi, int threads = 1);

/// Fraction of clicks with rank <= k; throws UndefinedMetric on no clicks.
double recall_from_ranks(std::span<const RankedClick> ranked, int k);
/// Ordered share among clicks with rank <= k; throws UndefinedMetric when none qualify.
double order_density_from_ranks(std::span<const RankedClick> ranked, int k);

double recall_at_k(const Model& model, const Dataset& test, const PreferenceVector& pi, int k);
double order_density_at_k(const Model& model, const Dataset& test, const PreferenceVector& pi, int k);

/// One FrontPoint per configured preference, all on the same test instances.
std::vector<FrontPoint> sweep_front(const Model& model, const Dataset& test, const MetricConfig& cfg,
                                    int threads = 1);

// CSV: pi_click,pi_order,recall_at_k,od_at_k,product,n_clicks
void write_front_csv(std::ostream& out, std::span<const FrontPoint> front);
void write_front_csv(const std::filesystem::path& path, std::span<const FrontPoint> front);
std::vector<FrontPoint> read_front_csv(const std::filesystem::path& path);

/// Spearman rank correlation (average ranks for ties).
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace paretoab
