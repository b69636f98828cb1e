#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

#include <Eigen/Core>

#include "paretoab/preference.hpp"
#include "paretoab/random.hpp"
#include "paretoab/session.hpp"

namespace paretoab {

struct LossConfig {
  double lambda = 1.0;
  int n_negatives = 64;
  /// Replace the order objective by the distortion loss (single-objective mode).
  bool use_distortion = false;
  /// Catalogs up to this size use the exact softmax for the click loss.
  std::int64_t exact_softmax_threshold = 2048;

  void validate() const {
    if (!(lambda >= 0.0)) throw std::invalid_argument("loss: lambda must be >= 0");
    if (n_negatives < 1) throw std::invalid_argument("loss: n_negatives must be >= 1");
  }
};

/// Batch-mean values of the individual objectives.
struct LossTerms {
  double click = 0.0;
  double order = 0.0;
  double distortion = 0.0;
};

struct LossBreakdown {
  double l_click = 0.0;
  double l_order = 0.0;
  double l_distortion = 0.0;
  double l_reg = 0.0;
  double scalarized = 0.0;
};

template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const Scalar mx = v.maxCoeff();
  return mx + std::log((v.array() - mx).exp().sum());
}

namespace detail {

// Uniform draw from [0, c) \ {target}.
inline Eigen::Index sample_negative(Eigen::Index c, Eigen::Index target, Rng& gen) {
  Eigen::Index j = std::uniform_int_distribution<Eigen::Index>(0, c - 2)(gen);
  return j >= target ? j + 1 : j;
}

}  // namespace detail

/// Click loss for one scored prefix, accumulating `weight * dL/dscores` into
/// `grad` when it is non-empty. Exact softmax cross-entropy up to the
/// configured catalog size, otherwise sampled softmax over the target plus
/// uniform negatives with a log((c-1)/n) proposal correction on the negatives.
template <typename Derived>
typename Derived::Scalar click_loss_accumulate(const Eigen::MatrixBase<Derived>& scores, ItemId target,
                                               const LossConfig& cfg, Rng& gen,
                                               std::span<typename Derived::Scalar> grad,
                                               typename Derived::Scalar weight) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index c = scores.size();
  if (target < 0 || target >= c) throw std::out_of_range("click_loss: target outside catalog");

  if (c <= cfg.exact_softmax_threshold || c < 2) {
    const Scalar lse = log_sum_exp(scores);
    if (!grad.empty()) {
      for (Eigen::Index j = 0; j < c; ++j) grad[j] += weight * std::exp(scores(j) - lse);
      grad[target] -= weight;
    }
    return lse - scores(target);
  }

  const int n = cfg.n_negatives;
  const Scalar correction = std::log(static_cast<Scalar>(c - 1) / static_cast<Scalar>(n));
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> logits(n + 1);
  Eigen::Matrix<Eigen::Index, Eigen::Dynamic, 1> ids(n + 1);
  ids(0) = target;
  logits(0) = scores(target);
  for (int i = 1; i <= n; ++i) {
    ids(i) = detail::sample_negative(c, target, gen);
    logits(i) = scores(ids(i)) + correction;
  }
  const Scalar lse = log_sum_exp(logits);
  if (!grad.empty()) {
    for (int i = 0; i <= n; ++i) grad[ids(i)] += weight * std::exp(logits(i) - lse);
    grad[target] -= weight;
  }
  return lse - logits(0);
}

template <typename Derived>
typename Derived::Scalar click_loss(const Eigen::MatrixBase<Derived>& scores, ItemId target,
                                    const LossConfig& cfg, Rng& gen) {
  return click_loss_accumulate(scores, target, cfg, gen, std::span<typename Derived::Scalar>{},
                               typename Derived::Scalar(0));
}

/// Binary cross-entropy on a logit, -[o log s(x) + (1-o) log(1-s(x))].
template <typename Scalar>
Scalar order_loss(Scalar logit, bool ordered) {
  // softplus(x) - o*x, written to avoid overflow for large |x|.
  const Scalar softplus = logit > 0 ? logit + std::log1p(std::exp(-logit)) : std::log1p(std::exp(logit));
  return softplus - (ordered ? logit : Scalar(0));
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  return x >= 0 ? Scalar(1) / (Scalar(1) + std::exp(-x)) : std::exp(x) / (Scalar(1) + std::exp(x));
}

/// Cross-entropy of softmax(scores) against the uniform distribution.
template <typename Derived>
typename Derived::Scalar distortion_loss(const Eigen::MatrixBase<Derived>& scores) {
  if (scores.size() < 2) throw std::invalid_argument("distortion_loss: need at least 2 classes");
  return log_sum_exp(scores) - scores.mean();
}

/// Accumulates `weight * dL_d/dscores` into grad and returns L_d.
template <typename Derived>
typename Derived::Scalar distortion_loss_accumulate(const Eigen::MatrixBase<Derived>& scores,
                                                    std::span<typename Derived::Scalar> grad,
                                                    typename Derived::Scalar weight) {
  using Scalar = typename Derived::Scalar;
  const Scalar lse = log_sum_exp(scores);
  const Scalar inv_c = Scalar(1) / static_cast<Scalar>(scores.size());
  for (Eigen::Index j = 0; j < scores.size(); ++j) grad[j] += weight * (std::exp(scores(j) - lse) - inv_c);
  return lse - scores.mean();
}

/// KL(l_hat || uniform) with l_hat_k = pi_k L_k / sum_j pi_j L_j; zero when
/// every weighted loss vanishes.
double nonuniformity_reg(const PreferenceVector& pi, const Eigen::VectorXd& losses);

/// d nonuniformity_reg / d losses.
Eigen::VectorXd nonuniformity_reg_gradient(const PreferenceVector& pi, const Eigen::VectorXd& losses);

/// The objective pair entering the scalarization: [L_click, L_order] or
/// [L_click, L_distortion] in distortion mode.
Eigen::Vector2d active_objectives(const LossTerms& terms, const LossConfig& cfg);

/// pi_1 L_1 + pi_2 L_2 + lambda L_reg over the active objective pair.
LossBreakdown scalarized_loss(const LossTerms& terms, const PreferenceVector& pi, const LossConfig& cfg);

/// d scalarized / d (L_1, L_2) at the given terms.
Eigen::Vector2d scalarized_loss_weights(const LossTerms& terms, const PreferenceVector& pi,
                                        const LossConfig& cfg);

}  // namespace paretoab
