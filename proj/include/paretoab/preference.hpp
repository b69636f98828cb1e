#pragma once

#include <initializer_list>
#include <vector>

#include <Eigen/Core>

#include "paretoab/random.hpp"

namespace paretoab {

inline constexpr double kPreferenceClip = 1e-4;

/// A point on the probability simplex weighting the objectives.
class PreferenceVector {
 public:
  PreferenceVector() = default;
  /// Throws std::invalid_argument unless entries are >= 0 and sum to 1 (1e-9).
  explicit PreferenceVector(Eigen::VectorXd weights);
  PreferenceVector(std::initializer_list<double> weights);

  /// Two-objective shorthand: [pi_click, 1 - pi_click].
  static PreferenceVector click_weight(double pi_click);

  const Eigen::VectorXd& weights() const { return weights_; }
  double operator[](Eigen::Index k) const { return weights_[k]; }
  Eigen::Index size() const { return weights_.size(); }

  bool operator==(const PreferenceVector& o) const { return weights_ == o.weights_; }

 private:
  Eigen::VectorXd weights_;
};

struct DirichletParams {
  Eigen::VectorXd beta = Eigen::Vector2d(0.5, 0.5);

  void validate() const;
};

/// Dirichlet draw via normalized Gamma variates, clipped to
/// [kPreferenceClip, 1 - kPreferenceClip] per coordinate and renormalized.
PreferenceVector sample_preference(const DirichletParams& params, Rng& gen);

/// The default evaluation grid: pi_click in {0.1, 0.3, 0.5, 0.7, 0.9}.
std::vector<PreferenceVector> default_preference_grid();

}  // namespace paretoab
