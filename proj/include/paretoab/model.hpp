#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "paretoab/losses.hpp"
#include "paretoab/preference.hpp"
#include "paretoab/random.hpp"
#include "paretoab/session.hpp"

namespace paretoab {

struct Hyperparams {
  std::int64_t catalog_size = 0;
  int embed_dim = 32;
  int hidden_dim = 64;
  int pref_dim = 2;
  int max_prefix_len = 20;
  double position_decay = 0.8;
  std::uint64_t seed = 0;

  void validate() const {
    if (catalog_size < 1) throw std::invalid_argument("model: catalog_size must be >= 1");
    if (embed_dim < 1 || hidden_dim < 1) throw std::invalid_argument("model: dims must be >= 1");
    if (pref_dim < 2) throw std::invalid_argument("model: pref_dim must be >= 2");
    if (max_prefix_len < 1) throw std::invalid_argument("model: max_prefix_len must be >= 1");
    if (!(position_decay > 0.0 && position_decay <= 1.0)) {
      throw std::invalid_argument("model: position_decay must lie in (0, 1]");
    }
  }

  bool operator==(const Hyperparams&) const = default;
};

/// The trainable tensors. Also used as the gradient container.
template <typename Scalar>
struct ModelTensors {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix item_embed;  // c x d, shared by input pooling and output scoring
  Matrix pref_proj;   // m x d
  Matrix enc_w;       // d x h
  Vector enc_b;       // h
  Matrix out_w;       // h x d
  Vector out_b;       // d
  Scalar order_b = 0;

  static ModelTensors zeros(const Hyperparams& hp) {
    ModelTensors t;
    t.item_embed = Matrix::Zero(hp.catalog_size, hp.embed_dim);
    t.pref_proj = Matrix::Zero(hp.pref_dim, hp.embed_dim);
    t.enc_w = Matrix::Zero(hp.embed_dim, hp.hidden_dim);
    t.enc_b = Vector::Zero(hp.hidden_dim);
    t.out_w = Matrix::Zero(hp.hidden_dim, hp.embed_dim);
    t.out_b = Vector::Zero(hp.embed_dim);
    t.order_b = 0;
    return t;
  }

  /// Visits every tensor as (name, contiguous row-major storage).
  template <typename F>
  void for_each(F&& f) {
    f(std::string_view("item_embed"), std::span<Scalar>(item_embed.data(), item_embed.size()));
    f(std::string_view("pref_proj"), std::span<Scalar>(pref_proj.data(), pref_proj.size()));
    f(std::string_view("enc_w"), std::span<Scalar>(enc_w.data(), enc_w.size()));
    f(std::string_view("enc_b"), std::span<Scalar>(enc_b.data(), enc_b.size()));
    f(std::string_view("out_w"), std::span<Scalar>(out_w.data(), out_w.size()));
    f(std::string_view("out_b"), std::span<Scalar>(out_b.data(), out_b.size()));
    f(std::string_view("order_b"), std::span<Scalar>(&order_b, 1));
  }

  template <typename F>
  void for_each(F&& f) const {
    const_cast<ModelTensors*>(this)->for_each(
        [&](std::string_view name, std::span<Scalar> s) { f(name, std::span<const Scalar>(s)); });
  }

  bool operator==(const ModelTensors& o) const {
    return item_embed == o.item_embed && pref_proj == o.pref_proj && enc_w == o.enc_w &&
           enc_b == o.enc_b && out_w == o.out_w && out_b == o.out_b && order_b == o.order_b;
  }
};

template <typename Scalar>
using Gradients = ModelTensors<Scalar>;

/// Preference-conditioned next-item recommender:
///   pool  = recency-weighted mean of prefix embeddings (weights decay^(T-t))
///   state = out_w^T relu(enc_w^T pool + enc_b) + out_b + pref_proj^T pi
///   click score_j = state . item_embed[j]
///   order logit_j = click score_j + order_b
template <typename Scalar>
struct ModelParams : ModelTensors<Scalar> {
  Hyperparams hp;

  bool operator==(const ModelParams& o) const {
    return hp == o.hp && static_cast<const ModelTensors<Scalar>&>(*this) == o;
  }
};

using Model = ModelParams<double>;

/// Weights uniform in (-0.05, 0.05) from the hyperparameter seed; biases zero.
template <typename Scalar = double>
ModelParams<Scalar> init_model(const Hyperparams& hp) {
  hp.validate();
  ModelParams<Scalar> p;
  static_cast<ModelTensors<Scalar>&>(p) = ModelTensors<Scalar>::zeros(hp);
  p.hp = hp;
  Rng gen(hp.seed);
  std::uniform_real_distribution<double> dist(-0.05, 0.05);
  auto fill = [&](auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(dist(gen));
  };
  fill(p.item_embed);
  fill(p.pref_proj);
  fill(p.enc_w);
  fill(p.out_w);
  return p;
}

/// One next-item instance: the clicks so far, the next click and whether it
/// was ordered.
struct Example {
  std::vector<ItemId> prefix;
  ItemId target = 0;
  bool ordered = false;
};

/// Every (first t clicks -> click t+1) transition of every session.
std::vector<Example> make_examples(const Dataset& d);

namespace detail {

template <typename Scalar>
std::span<const ItemId> truncate_prefix(std::span<const ItemId> prefix, const Hyperparams& hp) {
  if (prefix.empty()) throw std::invalid_argument("encode_session: empty prefix");
  const auto limit = static_cast<std::size_t>(hp.max_prefix_len);
  return prefix.size() > limit ? prefix.last(limit) : prefix;
}

/// Normalized recency weights decay^(T-t), t = 1..T.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> recency_weights(std::size_t length, Scalar decay) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> w(static_cast<Eigen::Index>(length));
  Scalar v = 1;
  for (Eigen::Index t = w.size() - 1; t >= 0; --t) {
    w[t] = v;
    v *= decay;
  }
  return w / w.sum();
}

}  // namespace detail

template <typename Scalar>
struct ForwardCache {
  using Matrix = typename ModelTensors<Scalar>::Matrix;
  Matrix pool;    // B x d
  Matrix pre;     // B x h, before the ReLU
  Matrix hidden;  // B x h
  Matrix states;  // B x d
};

/// Batched encoder over prefixes given by `prefix_of(i)` for i in [0, n).
template <typename Scalar, typename PrefixOf>
void forward_prefixes(const ModelParams<Scalar>& p, Eigen::Index n, PrefixOf&& prefix_of,
                      const PreferenceVector& pi, ForwardCache<Scalar>& cache) {
  if (pi.size() != p.pref_proj.rows()) throw std::invalid_argument("preference dimension mismatch");
  const Scalar decay = static_cast<Scalar>(p.hp.position_decay);
  cache.pool.setZero(n, p.item_embed.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::span<const ItemId> prefix = detail::truncate_prefix<Scalar>(prefix_of(i), p.hp);
    const auto w = detail::recency_weights<Scalar>(prefix.size(), decay);
    for (std::size_t t = 0; t < prefix.size(); ++t) {
      cache.pool.row(i) += w[static_cast<Eigen::Index>(t)] * p.item_embed.row(prefix[t]);
    }
  }
  cache.pre = cache.pool * p.enc_w;
  cache.pre.rowwise() += p.enc_b.transpose();
  cache.hidden = cache.pre.cwiseMax(Scalar(0));
  cache.states = cache.hidden * p.out_w;
  const auto pref_shift = (pi.weights().template cast<Scalar>().transpose() * p.pref_proj).eval();
  cache.states.rowwise() += p.out_b.transpose() + pref_shift;
}

template <typename Scalar>
void forward(const ModelParams<Scalar>& p, std::span<const Example> batch, const PreferenceVector& pi,
             ForwardCache<Scalar>& cache) {
  forward_prefixes(
      p, static_cast<Eigen::Index>(batch.size()),
      [&](Eigen::Index i) { return std::span<const ItemId>(batch[static_cast<std::size_t>(i)].prefix); },
      pi, cache);
}

/// Session state for a single prefix (older items beyond max_prefix_len are dropped).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> encode_session(const ModelParams<Scalar>& p,
                                                        std::span<const ItemId> prefix,
                                                        const PreferenceVector& pi) {
  ForwardCache<Scalar> cache;
  forward_prefixes(p, 1, [&](Eigen::Index) { return prefix; }, pi, cache);
  return cache.states.row(0).transpose();
}

template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> click_scores(const ModelParams<Scalar>& p,
                                                      const Eigen::MatrixBase<Derived>& state) {
  return p.item_embed * state;
}

template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> order_logits(const ModelParams<Scalar>& p,
                                                      const Eigen::MatrixBase<Derived>& state) {
  return (p.item_embed * state).array() + p.order_b;
}

/// Scalarized objective and its analytic gradient for one batch under a fixed
/// preference. Batch-mean losses feed the scalarization, so the non-uniformity
/// term couples the two objective gradients through its loss weights.
template <typename Scalar>
std::pair<LossBreakdown, Gradients<Scalar>> backward(const ModelParams<Scalar>& p,
                                                     std::span<const Example> batch,
                                                     const PreferenceVector& pi, const LossConfig& cfg,
                                                     Rng& gen) {
  using Matrix = typename ModelTensors<Scalar>::Matrix;
  if (batch.empty()) throw std::invalid_argument("backward: empty batch");
  cfg.validate();

  ForwardCache<Scalar> cache;
  forward(p, batch, pi, cache);
  const Eigen::Index b = cache.states.rows();
  const Eigen::Index c = p.item_embed.rows();
  const Matrix scores = cache.states * p.item_embed.transpose();
  const Scalar inv_b = Scalar(1) / static_cast<Scalar>(b);

  Matrix click_grad = Matrix::Zero(b, c);
  Matrix distortion_grad;
  if (cfg.use_distortion) distortion_grad = Matrix::Zero(b, c);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> order_residual(b);

  Scalar sum_click = 0, sum_order = 0, sum_distortion = 0;
  for (Eigen::Index i = 0; i < b; ++i) {
    const Example& ex = batch[static_cast<std::size_t>(i)];
    if (ex.target < 0 || ex.target >= c) throw std::out_of_range("backward: target outside catalog");
    const auto row = scores.row(i);
    sum_click += click_loss_accumulate(row, ex.target, cfg, gen,
                                       std::span<Scalar>(click_grad.row(i).data(), c), inv_b);
    const Scalar logit = row(ex.target) + p.order_b;
    sum_order += order_loss(logit, ex.ordered);
    order_residual[i] = (sigmoid(logit) - (ex.ordered ? Scalar(1) : Scalar(0))) * inv_b;
    if (cfg.use_distortion) {
      sum_distortion += distortion_loss_accumulate(
          row, std::span<Scalar>(distortion_grad.row(i).data(), c), inv_b);
    }
  }

  LossTerms terms;
  terms.click = static_cast<double>(sum_click * inv_b);
  terms.order = static_cast<double>(sum_order * inv_b);
  terms.distortion = static_cast<double>(sum_distortion * inv_b);
  if (!std::isfinite(terms.click)) throw std::runtime_error("non-finite loss term: l_click");
  if (!std::isfinite(terms.order)) throw std::runtime_error("non-finite loss term: l_order");
  if (!std::isfinite(terms.distortion)) throw std::runtime_error("non-finite loss term: l_distortion");

  const LossBreakdown breakdown = scalarized_loss(terms, pi, cfg);
  if (!std::isfinite(breakdown.l_reg)) throw std::runtime_error("non-finite loss term: l_reg");
  const Eigen::Vector2d weights = scalarized_loss_weights(terms, pi, cfg);
  const auto w_click = static_cast<Scalar>(weights[0]);
  const auto w_second = static_cast<Scalar>(weights[1]);

  Gradients<Scalar> g = Gradients<Scalar>::zeros(p.hp);
  Matrix score_grad = w_click * click_grad;
  if (cfg.use_distortion) {
    score_grad += w_second * distortion_grad;
  } else {
    for (Eigen::Index i = 0; i < b; ++i) {
      score_grad(i, batch[static_cast<std::size_t>(i)].target) += w_second * order_residual[i];
    }
    g.order_b = w_second * order_residual.sum();
  }

  // scores = S E^T
  const Matrix d_states = score_grad * p.item_embed;
  g.item_embed.noalias() = score_grad.transpose() * cache.states;

  // S = H out_w + out_b + pi^T P
  g.out_w.noalias() = cache.hidden.transpose() * d_states;
  const auto d_state_sum = d_states.colwise().sum().eval();
  g.out_b = d_state_sum.transpose();
  g.pref_proj.noalias() = pi.weights().template cast<Scalar>() * d_state_sum;

  // H = relu(pool enc_w + enc_b)
  Matrix d_pre = (d_states * p.out_w.transpose()).cwiseProduct(
      (cache.pre.array() > Scalar(0)).template cast<Scalar>().matrix());
  g.enc_w.noalias() = cache.pool.transpose() * d_pre;
  g.enc_b = d_pre.colwise().sum().transpose();
  const Matrix d_pool = d_pre * p.enc_w.transpose();

  const Scalar decay = static_cast<Scalar>(p.hp.position_decay);
  for (Eigen::Index i = 0; i < b; ++i) {
    const std::span<const ItemId> prefix =
        detail::truncate_prefix<Scalar>(batch[static_cast<std::size_t>(i)].prefix, p.hp);
    const auto w = detail::recency_weights<Scalar>(prefix.size(), decay);
    for (std::size_t t = 0; t < prefix.size(); ++t) {
      g.item_embed.row(prefix[t]) += w[static_cast<Eigen::Index>(t)] * d_pool.row(i);
    }
  }
  return {breakdown, std::move(g)};
}

}  // namespace paretoab
