#include "paretoab/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace paretoab {

void WorldConfig::validate() const {
  if (catalog_size < 50) throw std::invalid_argument("world: catalog_size must be >= 50");
  if (latent_dim < 1) throw std::invalid_argument("world: latent_dim must be >= 1");
  if (!(attract_convert_corr >= -1.0 && attract_convert_corr <= 0.0)) {
    throw std::invalid_argument("world: attract_convert_corr must lie in [-1, 0]");
  }
  if (!(mean_session_length > 2.0 && mean_session_length <= 50.0)) {
    throw std::invalid_argument("world: mean_session_length must lie in (2, 50]");
  }
  if (latent_scale < 0 || attract_log_std < 0 || convert_logit_std < 0) {
    throw std::invalid_argument("world: scales must be non-negative");
  }
}

bool World::operator==(const World& o) const {
  return config.catalog_size == o.config.catalog_size && seed == o.seed && attract == o.attract &&
         convert == o.convert && latent == o.latent;
}

namespace {

// Zero mean, unit (population) variance.
void standardize(Eigen::VectorXd& v) {
  v.array() -= v.mean();
  const double sd = std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
  if (sd > 0) v /= sd;
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

}  // namespace

World generate_world(const WorldConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const Eigen::Index c = cfg.catalog_size;
  Rng gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Eigen::VectorXd z1(c), z2(c);
  for (Eigen::Index i = 0; i < c; ++i) z1[i] = normal(gen);
  for (Eigen::Index i = 0; i < c; ++i) z2[i] = normal(gen);

  // Orthogonalize in-sample so the realised correlation equals the target.
  standardize(z1);
  standardize(z2);
  z2 -= (z2.dot(z1) / z1.squaredNorm()) * z1;
  standardize(z2);
  const double rho = cfg.attract_convert_corr;
  const Eigen::VectorXd u = rho * z1 + std::sqrt(1.0 - rho * rho) * z2;

  World w;
  w.config = cfg;
  w.seed = seed;
  w.attract = (cfg.attract_log_std * z1).array().exp();
  w.convert.resize(c);
  for (Eigen::Index i = 0; i < c; ++i) {
    const double p = 1.0 / (1.0 + std::exp(-(cfg.convert_logit_mean + cfg.convert_logit_std * u[i])));
    w.convert[i] = std::clamp(p, 1e-12, 1.0 - 1e-12);
  }
  w.latent.resize(c, cfg.latent_dim);
  for (Eigen::Index i = 0; i < w.latent.size(); ++i) w.latent.data()[i] = cfg.latent_scale * normal(gen);
  w.measured_corr = attract_convert_correlation(w);
  return w;
}

double attract_convert_correlation(const World& w) {
  const Eigen::Index c = w.attract.size();
  Eigen::VectorXd a = w.attract.array().log();
  Eigen::VectorXd b(c);
  for (Eigen::Index i = 0; i < c; ++i) b[i] = logit(w.convert[i]);
  a.array() -= a.mean();
  b.array() -= b.mean();
  const double denom = std::sqrt(a.squaredNorm() * b.squaredNorm());
  return denom > 0 ? a.dot(b) / denom : 0.0;
}

TransitionSampler::TransitionSampler(const World& w) : world_(&w) {
  const std::int64_t c = w.catalog_size();
  start_cdf_.resize(static_cast<std::size_t>(c));
  double acc = 0;
  for (std::int64_t j = 0; j < c; ++j) start_cdf_[j] = (acc += w.attract[j]);
  if (c <= kDenseLimit) {
    dense_.reserve(static_cast<std::size_t>(c * c));
    for (std::int64_t i = 0; i < c; ++i) {
      const std::vector<double> row = row_cdf(static_cast<ItemId>(i));
      dense_.insert(dense_.end(), row.begin(), row.end());
    }
  }
}

std::vector<double> TransitionSampler::row_cdf(ItemId from) const {
  const World& w = *world_;
  const Eigen::Index c = w.catalog_size();
  Eigen::VectorXd logits = w.latent * w.latent.row(from).transpose();
  logits.array() += w.attract.array().log();
  const double mx = logits.maxCoeff();
  std::vector<double> cdf(static_cast<std::size_t>(c));
  double acc = 0;
  for (Eigen::Index j = 0; j < c; ++j) cdf[j] = (acc += std::exp(logits[j] - mx));
  return cdf;
}

ItemId TransitionSampler::pick(std::span<const double> cdf, double u) {
  const double target = u * cdf.back();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
  if (it == cdf.end()) --it;
  return static_cast<ItemId>(it - cdf.begin());
}

Dataset sample_sessions(const World& w, std::size_t n_sessions, std::uint64_t seed) {
  if (n_sessions < 1) throw std::invalid_argument("sample_sessions: n_sessions must be >= 1");
  w.config.validate();
  const TransitionSampler sampler(w);
  Rng gen(seed);
  std::geometric_distribution<int> extra(1.0 / (w.config.mean_session_length - 1.0));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Dataset d;
  d.catalog_size = w.catalog_size();
  d.sessions.reserve(n_sessions);
  Timestamp clock = 0;
  for (std::size_t s = 0; s < n_sessions; ++s) {
    const int length = std::min(50, 2 + extra(gen));
    ClickOrderSession session;
    session.session_id = static_cast<std::int64_t>(s);
    session.start_ts = clock;
    ItemId item = sampler.start(gen);
    for (int t = 0; t < length; ++t) {
      if (t > 0) item = sampler.step(item, gen);
      const bool ordered = unit(gen) < w.convert[item];
      session.pairs.push_back({item, ordered});
      clock += ordered ? 2 : 1;
    }
    d.sessions.push_back(std::move(session));
  }
  return d;
}

void save_world(const World& w, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  const WorldConfig& c = w.config;
  j["config"] = {{"catalog_size", c.catalog_size},
                 {"latent_dim", c.latent_dim},
                 {"latent_scale", c.latent_scale},
                 {"attract_log_std", c.attract_log_std},
                 {"convert_logit_mean", c.convert_logit_mean},
                 {"convert_logit_std", c.convert_logit_std},
                 {"attract_convert_corr", c.attract_convert_corr},
                 {"mean_session_length", c.mean_session_length}};
  j["seed"] = w.seed;
  j["measured_corr"] = w.measured_corr;
  j["attract"] = std::vector<double>(w.attract.data(), w.attract.data() + w.attract.size());
  j["convert"] = std::vector<double>(w.convert.data(), w.convert.data() + w.convert.size());
  j["latent"] = std::vector<double>(w.latent.data(), w.latent.data() + w.latent.size());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump() << '\n';
}

World load_world(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const nlohmann::json j = nlohmann::json::parse(in);
  World w;
  const auto& c = j.at("config");
  w.config.catalog_size = c.at("catalog_size").get<std::int64_t>();
  w.config.latent_dim = c.at("latent_dim").get<int>();
  w.config.latent_scale = c.at("latent_scale").get<double>();
  w.config.attract_log_std = c.at("attract_log_std").get<double>();
  w.config.convert_logit_mean = c.at("convert_logit_mean").get<double>();
  w.config.convert_logit_std = c.at("convert_logit_std").get<double>();
  w.config.attract_convert_corr = c.at("attract_convert_corr").get<double>();
  w.config.mean_session_length = c.at("mean_session_length").get<double>();
  w.seed = j.at("seed").get<std::uint64_t>();
  w.measured_corr = j.at("measured_corr").get<double>();
  const auto attract = j.at("attract").get<std::vector<double>>();
  const auto convert = j.at("convert").get<std::vector<double>>();
  const auto latent = j.at("latent").get<std::vector<double>>();
  const auto n = static_cast<Eigen::Index>(w.config.catalog_size);
  if (static_cast<Eigen::Index>(attract.size()) != n || static_cast<Eigen::Index>(convert.size()) != n ||
      static_cast<Eigen::Index>(latent.size()) != n * w.config.latent_dim) {
    throw std::runtime_error("world file " + path.string() + ": array sizes disagree with config");
  }
  w.attract = Eigen::Map<const Eigen::VectorXd>(attract.data(), n);
  w.convert = Eigen::Map<const Eigen::VectorXd>(convert.data(), n);
  w.latent = Eigen::Map<const World::Matrix>(latent.data(), n, w.config.latent_dim);
  return w;
}

}  // namespace paretoab
