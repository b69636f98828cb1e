#include "paretoab/losses.hpp"

namespace paretoab {

namespace {

void check_pair(const PreferenceVector& pi, const Eigen::VectorXd& losses) {
  if (pi.size() != losses.size()) {
    throw std::invalid_argument("preference/loss dimension mismatch");
  }
  if ((losses.array() < 0.0).any()) throw std::invalid_argument("losses must be non-negative");
}

}  // namespace

double nonuniformity_reg(const PreferenceVector& pi, const Eigen::VectorXd& losses) {
  check_pair(pi, losses);
  const Eigen::VectorXd weighted = pi.weights().cwiseProduct(losses);
  const double total = weighted.sum();
  if (total <= 0.0) return 0.0;
  const double m = static_cast<double>(losses.size());
  double kl = 0.0;
  for (Eigen::Index k = 0; k < weighted.size(); ++k) {
    const double share = weighted[k] / total;
    if (share > 0.0) kl += share * std::log(m * share);
  }
  return kl;
}

Eigen::VectorXd nonuniformity_reg_gradient(const PreferenceVector& pi, const Eigen::VectorXd& losses) {
  check_pair(pi, losses);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(losses.size());
  const Eigen::VectorXd weighted = pi.weights().cwiseProduct(losses);
  const double total = weighted.sum();
  if (total <= 0.0) return grad;
  const double kl = nonuniformity_reg(pi, losses);
  const double m = static_cast<double>(losses.size());
  for (Eigen::Index k = 0; k < weighted.size(); ++k) {
    const double share = weighted[k] / total;
    // Using 0 log 0 = 0 for an empty share.
    const double log_term = share > 0.0 ? std::log(m * share) : 0.0;
    grad[k] = pi[k] * (log_term - kl) / total;
  }
  return grad;
}

Eigen::Vector2d active_objectives(const LossTerms& terms, const LossConfig& cfg) {
  return {terms.click, cfg.use_distortion ? terms.distortion : terms.order};
}

LossBreakdown scalarized_loss(const LossTerms& terms, const PreferenceVector& pi, const LossConfig& cfg) {
  if (pi.size() != 2) throw std::invalid_argument("scalarized_loss: expected two objectives");
  const Eigen::Vector2d objectives = active_objectives(terms, cfg);
  LossBreakdown b;
  b.l_click = terms.click;
  b.l_order = terms.order;
  b.l_distortion = terms.distortion;
  b.l_reg = nonuniformity_reg(pi, objectives);
  b.scalarized = pi.weights().dot(objectives) + cfg.lambda * b.l_reg;
  return b;
}

Eigen::Vector2d scalarized_loss_weights(const LossTerms& terms, const PreferenceVector& pi,
                                        const LossConfig& cfg) {
  if (pi.size() != 2) throw std::invalid_argument("scalarized_loss: expected two objectives");
  const Eigen::Vector2d objectives = active_objectives(terms, cfg);
  Eigen::Vector2d w = pi.weights();
  if (cfg.lambda > 0.0) w += cfg.lambda * nonuniformity_reg_gradient(pi, objectives);
  return w;
}

}  // namespace paretoab
