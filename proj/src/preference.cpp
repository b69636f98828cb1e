#include "paretoab/preference.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace paretoab {

PreferenceVector::PreferenceVector(Eigen::VectorXd weights) : weights_(std::move(weights)) {
  if (weights_.size() < 1) throw std::invalid_argument("preference: empty vector");
  if ((weights_.array() < 0.0).any() || !weights_.allFinite()) {
    throw std::invalid_argument("preference: entries must be finite and non-negative");
  }
  if (std::abs(weights_.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument("preference: entries must sum to 1");
  }
}

PreferenceVector::PreferenceVector(std::initializer_list<double> weights)
    : PreferenceVector(Eigen::Map<const Eigen::VectorXd>(weights.begin(),
                                                        static_cast<Eigen::Index>(weights.size()))) {}

PreferenceVector PreferenceVector::click_weight(double pi_click) {
  return PreferenceVector(Eigen::Vector2d(pi_click, 1.0 - pi_click));
}

void DirichletParams::validate() const {
  if (beta.size() < 2) throw std::invalid_argument("dirichlet: need at least 2 concentrations");
  if ((beta.array() <= 0.0).any() || !beta.allFinite()) {
    throw std::invalid_argument("dirichlet: concentrations must be positive");
  }
}

PreferenceVector sample_preference(const DirichletParams& params, Rng& gen) {
  params.validate();
  const Eigen::Index m = params.beta.size();
  Eigen::VectorXd draw(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    draw[k] = std::gamma_distribution<double>(params.beta[k], 1.0)(gen);
  }
  const double total = draw.sum();
  if (total > 0) {
    draw /= total;
  } else {
    // Every Gamma variate underflowed; only possible for tiny beta.
    draw.setZero();
    draw[static_cast<Eigen::Index>(gen() % static_cast<std::uint64_t>(m))] = 1.0;
  }
  // Clipping then renormalizing can push a coordinate back under the floor
  // for m > 2; a few rounds settle it.
  for (int round = 0; round < 8; ++round) {
    draw = draw.cwiseMax(kPreferenceClip).cwiseMin(1.0 - kPreferenceClip);
    draw /= draw.sum();
    if (draw.minCoeff() >= kPreferenceClip * (1 - 1e-12)) break;
  }
  return PreferenceVector(draw);
}

std::vector<PreferenceVector> default_preference_grid() {
  std::vector<PreferenceVector> grid;
  for (double pc : {0.1, 0.3, 0.5, 0.7, 0.9}) grid.push_back(PreferenceVector::click_weight(pc));
  return grid;
}

}  // namespace paretoab
