#include "paretoab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

#include "paretoab/csv.hpp"
#include "paretoab/parallel.hpp"

namespace paretoab {

void MetricConfig::validate() const {
  if (k < 1) throw std::invalid_argument("metrics: k must be >= 1");
  if (preferences.size() < 2) throw std::invalid_argument("metrics: need at least 2 preferences");
  for (std::size_t i = 0; i < preferences.size(); ++i) {
    for (std::size_t j = i + 1; j < preferences.size(); ++j) {
      if (preferences[i] == preferences[j]) throw std::invalid_argument("metrics: preferences must be distinct");
    }
  }
}

std::vector<RankedClick> rank_clicks(const Model& model, std::span<const Example> instances,
                                     const PreferenceVector& pi, int threads) {
  constexpr std::size_t kChunk = 256;
  std::vector<RankedClick> ranked(instances.size());
  const std::size_t n_chunks = (instances.size() + kChunk - 1) / kChunk;
  parallel_for(n_chunks, threads, [&](std::size_t chunk) {
    const std::size_t begin = chunk * kChunk;
    const std::span<const Example> part = instances.subspan(begin, std::min(kChunk, instances.size() - begin));
    ForwardCache<double> cache;
    forward(model, part, pi, cache);
    const Model::Matrix scores = cache.states * model.item_embed.transpose();
    for (std::size_t i = 0; i < part.size(); ++i) {
      ranked[begin + i] = {rank_of_target(scores.row(static_cast<Eigen::Index>(i)), part[i].target),
                           part[i].ordered};
    }
  });
  return ranked;
}

double recall_from_ranks(std::span<const RankedClick> ranked, int k) {
  if (ranked.empty()) throw UndefinedMetric("recall undefined: no evaluable clicks");
  const auto hits = std::count_if(ranked.begin(), ranked.end(), [k](const RankedClick& r) { return r.rank <= k; });
  return static_cast<double>(hits) / static_cast<double>(ranked.size());
}

double order_density_from_ranks(std::span<const RankedClick> ranked, int k) {
  std::size_t in_top = 0, ordered = 0;
  for (const RankedClick& r : ranked) {
    if (r.rank > k) continue;
    ++in_top;
    if (r.ordered) ++ordered;
  }
  if (in_top == 0) throw UndefinedMetric("OD undefined: no click ranked within the top " + std::to_string(k));
  return static_cast<double>(ordered) / static_cast<double>(in_top);
}

namespace {

std::vector<Example> evaluation_instances(const Model& model, const Dataset& test) {
  require_catalog(model, test.catalog_size);
  std::vector<Example> instances = make_examples(test);
  if (instances.empty()) throw UndefinedMetric("no evaluable next-item instances in the test set");
  return instances;
}

}  // namespace

double recall_at_k(const Model& model, const Dataset& test, const PreferenceVector& pi, int k) {
  const auto instances = evaluation_instances(model, test);
  return recall_from_ranks(rank_clicks(model, instances, pi), k);
}

double order_density_at_k(const Model& model, const Dataset& test, const PreferenceVector& pi, int k) {
  const auto instances = evaluation_instances(model, test);
  return order_density_from_ranks(rank_clicks(model, instances, pi), k);
}

std::vector<FrontPoint> sweep_front(const Model& model, const Dataset& test, const MetricConfig& cfg,
                                    int threads) {
  cfg.validate();
  const auto instances = evaluation_instances(model, test);
  std::vector<FrontPoint> front;
  for (const PreferenceVector& pi : cfg.preferences) {
    const auto ranked = rank_clicks(model, instances, pi, threads);
    FrontPoint p;
    p.pi = pi;
    p.recall = recall_from_ranks(ranked, cfg.k);
    p.od = order_density_from_ranks(ranked, cfg.k);
    p.product = p.recall * p.od;
    p.n_clicks = ranked.size();
    front.push_back(p);
  }
  return front;
}

void write_front_csv(std::ostream& out, std::span<const FrontPoint> front) {
  out << "pi_click,pi_order,recall_at_k,od_at_k,product,n_clicks\n";
  for (const FrontPoint& p : front) {
    out << csv::num(p.pi[0]) << ',' << csv::num(p.pi[1]) << ',' << csv::num(p.recall) << ','
        << csv::num(p.od) << ',' << csv::num(p.product) << ',' << p.n_clicks << '\n';
  }
}

void write_front_csv(const std::filesystem::path& path, std::span<const FrontPoint> front) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_front_csv(out, front);
}

std::vector<FrontPoint> read_front_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "pi_click,pi_order,recall_at_k,od_at_k,product,n_clicks") {
    throw std::runtime_error(path.string() + ": unexpected front CSV header");
  }
  std::vector<FrontPoint> front;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != 6) throw std::runtime_error(path.string() + ": line " + std::to_string(n) + ": expected 6 fields");
    FrontPoint p;
    p.pi = PreferenceVector(Eigen::Vector2d(csv::parse<double>(f[0], n), csv::parse<double>(f[1], n)));
    p.recall = csv::parse<double>(f[2], n);
    p.od = csv::parse<double>(f[3], n);
    p.product = csv::parse<double>(f[4], n);
    p.n_clicks = csv::parse<std::size_t>(f[5], n);
    front.push_back(p);
  }
  return front;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("spearman: need two equal-length samples");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const Eigen::Map<const Eigen::VectorXd> x(ra.data(), static_cast<Eigen::Index>(ra.size()));
  const Eigen::Map<const Eigen::VectorXd> y(rb.data(), static_cast<Eigen::Index>(rb.size()));
  const Eigen::VectorXd dx = x.array() - x.mean();
  const Eigen::VectorXd dy = y.array() - y.mean();
  const double denom = std::sqrt(dx.squaredNorm() * dy.squaredNorm());
  if (denom == 0.0) return 0.0;
  return dx.dot(dy) / denom;
}

}  // namespace paretoab
