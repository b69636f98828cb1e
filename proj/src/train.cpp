#include "paretoab/train.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace paretoab {

std::vector<Example> make_examples(const Dataset& d) {
  std::vector<Example> out;
  for (const ClickOrderSession& s : d.sessions) {
    std::vector<ItemId> prefix;
    prefix.reserve(s.pairs.size());
    for (std::size_t t = 0; t + 1 < s.pairs.size(); ++t) {
      prefix.push_back(s.pairs[t].item);
      out.push_back({prefix, s.pairs[t + 1].item, s.pairs[t + 1].ordered});
    }
  }
  return out;
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("optimizer: learning_rate must be > 0");
  if (batch_size < 1) throw std::invalid_argument("optimizer: batch_size must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("optimizer: moment decays must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("optimizer: epsilon must be > 0");
}

namespace {

class Optimizer {
 public:
  Optimizer(const OptimizerConfig& cfg, const Hyperparams& hp)
      : cfg_(cfg), m_(ModelTensors<double>::zeros(hp)), v_(ModelTensors<double>::zeros(hp)) {}

  void step(Model& model, Gradients<double>& grad) {
    ++t_;
    if (cfg_.kind == OptimizerConfig::Kind::kSgd) {
      visit(model, grad, [&](double& p, double g, double&, double&) { p -= cfg_.learning_rate * g; });
      return;
    }
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    const double step = cfg_.learning_rate * std::sqrt(bc2) / bc1;
    visit(model, grad, [&](double& p, double g, double& m, double& v) {
      m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
      v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g * g;
      p -= step * m / (std::sqrt(v) + cfg_.epsilon * std::sqrt(bc2));
    });
  }

 private:
  template <typename F>
  void visit(Model& model, Gradients<double>& grad, F&& f) {
    std::vector<std::span<double>> params, grads, ms, vs;
    auto collect = [](std::vector<std::span<double>>& out) {
      return [&out](std::string_view, std::span<double> s) { out.push_back(s); };
    };
    model.for_each(collect(params));
    grad.for_each(collect(grads));
    m_.for_each(collect(ms));
    v_.for_each(collect(vs));
    for (std::size_t k = 0; k < params.size(); ++k) {
      for (std::size_t i = 0; i < params[k].size(); ++i) f(params[k][i], grads[k][i], ms[k][i], vs[k][i]);
    }
  }

  OptimizerConfig cfg_;
  ModelTensors<double> m_, v_;
  std::uint64_t t_ = 0;
};

}  // namespace

TrainResult train(Model model, std::vector<Example> examples, const TrainConfig& cfg, int epochs,
                  std::uint32_t start_epoch, const std::function<void(const EpochLog&)>& on_epoch) {
  cfg.loss.validate();
  cfg.dirichlet.validate();
  cfg.optimizer.validate();
  if (epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  if (cfg.dirichlet.beta.size() != model.hp.pref_dim) {
    throw std::invalid_argument("train: Dirichlet dimension does not match the model's pref_dim");
  }
  TrainResult result{std::move(model), {}};
  if (epochs == 0) return result;
  if (examples.empty()) throw std::invalid_argument("train: no training examples");
  for (const Example& ex : examples) {
    if (ex.target < 0 || ex.target >= result.model.hp.catalog_size) {
      throw std::invalid_argument("train: example target outside the model catalog");
    }
  }

  Rng gen(derive_seed(cfg.seed, start_epoch));
  Optimizer opt(cfg.optimizer, result.model.hp);
  const auto batch_size = static_cast<std::size_t>(cfg.optimizer.batch_size);

  for (int e = 0; e < epochs; ++e) {
    const std::uint32_t epoch = start_epoch + static_cast<std::uint32_t>(e) + 1;
    std::shuffle(examples.begin(), examples.end(), gen);
    LossBreakdown sum;
    std::size_t n_batches = 0;
    for (std::size_t begin = 0; begin < examples.size(); begin += batch_size) {
      const std::span<const Example> batch =
          std::span<const Example>(examples).subspan(begin, std::min(batch_size, examples.size() - begin));
      const PreferenceVector pi = sample_preference(cfg.dirichlet, gen);
      std::pair<LossBreakdown, Gradients<double>> out;
      try {
        out = backward(result.model, batch, pi, cfg.loss, gen);
      } catch (const std::runtime_error& err) {
        throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                                 std::to_string(n_batches) + ": " + err.what());
      }
      opt.step(result.model, out.second);
      sum.l_click += out.first.l_click;
      sum.l_order += out.first.l_order;
      sum.l_distortion += out.first.l_distortion;
      sum.l_reg += out.first.l_reg;
      sum.scalarized += out.first.scalarized;
      ++n_batches;
    }
    const double n = static_cast<double>(n_batches);
    EpochLog entry{epoch, {sum.l_click / n, sum.l_order / n, sum.l_distortion / n, sum.l_reg / n,
                           sum.scalarized / n}};
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  return result;
}

void write_train_log(std::ostream& out, const std::vector<EpochLog>& log, bool with_distortion) {
  for (const EpochLog& e : log) {
    nlohmann::ordered_json j;
    j["epoch"] = e.epoch;
    j["l_click"] = e.mean.l_click;
    j["l_order"] = e.mean.l_order;
    if (with_distortion) j["l_distortion"] = e.mean.l_distortion;
    j["l_reg"] = e.mean.l_reg;
    j["scalarized"] = e.mean.scalarized;
    out << j.dump() << '\n';
  }
}

}  // namespace paretoab
