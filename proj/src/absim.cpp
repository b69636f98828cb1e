#include "paretoab/absim.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "paretoab/checkpoint.hpp"
#include "paretoab/csv.hpp"
#include "paretoab/parallel.hpp"

namespace paretoab {

void GroupAssignment::validate() const {
  if (shares.empty()) throw std::invalid_argument("assignment: need at least one group");
  for (double s : shares) {
    if (!(s >= 0.0)) throw std::invalid_argument("assignment: shares must be non-negative");
  }
  const double total = std::accumulate(shares.begin(), shares.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("assignment: shares must sum to 1");
}

GroupAssignment GroupAssignment::uniform(std::size_t g, std::uint64_t salt) {
  if (g == 0) throw std::invalid_argument("assignment: need at least one group");
  return {std::vector<double>(g, 1.0 / static_cast<double>(g)), salt};
}

std::size_t assign_group(std::uint64_t user_id, const GroupAssignment& ga) {
  const std::uint64_t h = mix64(user_id ^ mix64(ga.salt));
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  double cumulative = 0.0;
  for (std::size_t i = 0; i < ga.shares.size(); ++i) {
    cumulative += ga.shares[i];
    if (u < cumulative) return i;
  }
  // Rounding in the cumulative sum: fall back to the last non-empty group.
  for (std::size_t i = ga.shares.size(); i-- > 0;) {
    if (ga.shares[i] > 0.0) return i;
  }
  return 0;
}

std::vector<ItemId> top_k(const Eigen::Ref<const Eigen::VectorXd>& scores, int k) {
  const auto c = static_cast<std::size_t>(scores.size());
  const std::size_t n = std::min(c, static_cast<std::size_t>(std::max(k, 0)));
  std::vector<ItemId> ids(c);
  std::iota(ids.begin(), ids.end(), 0);
  const auto better = [&](ItemId a, ItemId b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  };
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n), ids.end(), better);
  ids.resize(n);
  return ids;
}

std::vector<ItemId> serve(const Model& model, const PreferenceVector& pi, std::span<const ItemId> prefix, int k) {
  const Eigen::VectorXd state = encode_session(model, prefix, pi);
  return top_k(click_scores(model, state), k);
}

void ExperimentConfig::validate() const {
  assignment.validate();
  if (preferences.size() != assignment.groups()) {
    throw std::invalid_argument("experiment: need one preference per group");
  }
  if (slate_size < 1) throw std::invalid_argument("experiment: slate_size must be >= 1");
  if (n_impressions < 1) throw std::invalid_argument("experiment: n_impressions must be >= 1");
}

ServingTable::ServingTable(const Model& model, std::span<const PreferenceVector> preferences, int k, int threads)
    : catalog_(model.hp.catalog_size),
      k_(static_cast<std::size_t>(std::min<std::int64_t>(k, model.hp.catalog_size))) {
  if (k < 1) throw std::invalid_argument("serving: k must be >= 1");
  slates_.resize(preferences.size() * static_cast<std::size_t>(catalog_) * k_);
  constexpr Eigen::Index kChunk = 256;
  const std::size_t chunks_per_group = static_cast<std::size_t>((catalog_ + kChunk - 1) / kChunk);
  parallel_for(preferences.size() * chunks_per_group, threads, [&](std::size_t task) {
    const std::size_t group = task / chunks_per_group;
    const Eigen::Index begin = static_cast<Eigen::Index>(task % chunks_per_group) * kChunk;
    const Eigen::Index n = std::min<Eigen::Index>(kChunk, catalog_ - begin);
    std::vector<ItemId> contexts(static_cast<std::size_t>(n));
    std::iota(contexts.begin(), contexts.end(), static_cast<ItemId>(begin));
    ForwardCache<double> cache;
    forward_prefixes(
        model, n, [&](Eigen::Index i) { return std::span<const ItemId>(&contexts[static_cast<std::size_t>(i)], 1); },
        preferences[group], cache);
    const Model::Matrix scores = cache.states * model.item_embed.transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd row = scores.row(i).transpose();
      const std::vector<ItemId> best = top_k(row, static_cast<int>(k_));
      std::copy(best.begin(), best.end(),
                slates_.begin() + static_cast<std::ptrdiff_t>(
                                      (group * static_cast<std::size_t>(catalog_) + static_cast<std::size_t>(begin + i)) * k_));
    }
  });
}

namespace {

struct Request {
  std::uint64_t user_id;
  std::uint32_t group;
  ItemId context;
};

template <typename G>
Request draw_request(const TransitionSampler& sampler, const GroupAssignment& ga, G& gen) {
  Request r;
  r.user_id = gen();
  r.group = static_cast<std::uint32_t>(assign_group(r.user_id, ga));
  r.context = sampler.step(sampler.start(gen), gen);
  return r;
}

}  // namespace

std::vector<Impression> simulate_experiment(const World& world, const ServingTable& table,
                                            const ExperimentConfig& cfg, std::uint64_t seed, int threads) {
  cfg.validate();
  const TransitionSampler sampler(world);
  std::vector<Impression> log(cfg.n_impressions);
  constexpr std::size_t kChunk = 4096;
  const std::size_t n_chunks = (cfg.n_impressions + kChunk - 1) / kChunk;
  parallel_for(n_chunks, threads, [&](std::size_t chunk) {
    const std::size_t end = std::min(cfg.n_impressions, (chunk + 1) * kChunk);
    for (std::size_t i = chunk * kChunk; i < end; ++i) {
      SplitMix64 gen(derive_seed(seed, i));
      const Request req = draw_request(sampler, cfg.assignment, gen);
      const ImpressionOutcome out =
          simulate_impression(world, cfg.click, table.slate(req.group, req.context), req.context, gen);
      const PreferenceVector& pi = cfg.preferences[req.group];
      log[i] = {i, req.user_id, req.group, pi[0], pi[1], out.clicked, out.ordered, out.units};
    }
  });
  return log;
}

std::vector<Impression> simulate_experiment(const World& world, const Model& model, const ExperimentConfig& cfg,
                                            std::uint64_t seed, int threads) {
  cfg.validate();
  require_catalog(model, world.catalog_size());
  const ServingTable table(model, cfg.preferences, cfg.slate_size, threads);
  return simulate_experiment(world, table, cfg, seed, threads);
}

double calibrate_click_bias(const World& world, const ServingTable& table, const ExperimentConfig& cfg,
                            double target_ctr, std::uint64_t seed, std::size_t n_pilot) {
  cfg.validate();
  if (!(target_ctr > 0.0 && target_ctr < 1.0)) throw std::invalid_argument("calibration: target CTR must lie in (0, 1)");
  const TransitionSampler sampler(world);
  std::vector<Request> requests(n_pilot);
  for (std::size_t i = 0; i < n_pilot; ++i) {
    SplitMix64 gen(derive_seed(seed, i));
    requests[i] = draw_request(sampler, cfg.assignment, gen);
  }
  auto pilot_ctr = [&](double bias) {
    ClickModel click = cfg.click;
    click.bias = bias;
    std::size_t clicks = 0;
    for (std::size_t i = 0; i < n_pilot; ++i) {
      SplitMix64 gen(derive_seed(seed ^ 0x5bd1e995ULL, i));
      const Request& r = requests[i];
      clicks += simulate_impression(world, click, table.slate(r.group, r.context), r.context, gen).clicked;
    }
    return static_cast<double>(clicks) / static_cast<double>(n_pilot);
  };
  double lo = -30.0, hi = 10.0;
  for (int it = 0; it < 50; ++it) {
    const double mid = 0.5 * (lo + hi);
    (pilot_ctr(mid) < target_ctr ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<GroupKpis> aggregate_kpis(std::span<const Impression> log, std::size_t expected_groups) {
  if (log.empty()) throw std::invalid_argument("aggregate_kpis: empty log");
  std::size_t g = expected_groups;
  for (const Impression& imp : log) g = std::max<std::size_t>(g, imp.group + 1);
  std::vector<GroupKpis> acc(g);
  for (const Impression& imp : log) {
    GroupKpis& k = acc[imp.group];
    ++k.n;
    k.clicks += imp.clicked;
    k.orders += imp.ordered;
    k.units_total += imp.units;
  }
  std::vector<GroupKpis> out;
  for (std::uint32_t i = 0; i < g; ++i) {
    GroupKpis k = acc[i];
    if (k.n == 0) {
      std::cerr << "warning: group " << i << " has no impressions; omitted\n";
      continue;
    }
    k.group = i;
    k.ctr = static_cast<double>(k.clicks) / static_cast<double>(k.n);
    if (k.clicks > 0) k.cvr = static_cast<double>(k.orders) / static_cast<double>(k.clicks);
    out.push_back(k);
  }
  return out;
}

void write_impressions_csv(std::ostream& out, std::span<const Impression> log) {
  out << "impression_id,user_id,group,pi_click,pi_order,clicked,ordered,units\n";
  for (const Impression& r : log) {
    out << r.impression_id << ',' << r.user_id << ',' << r.group << ',' << csv::num(r.pi_click) << ','
        << csv::num(r.pi_order) << ',' << int(r.clicked) << ',' << int(r.ordered) << ',' << r.units << '\n';
  }
}

void write_impressions_csv(const std::filesystem::path& path, std::span<const Impression> log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_impressions_csv(out, log);
}

std::vector<Impression> read_impressions_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "impression_id,user_id,group,pi_click,pi_order,clicked,ordered,units") {
    throw std::runtime_error(path.string() + ": unexpected impression CSV header");
  }
  std::vector<Impression> log;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != 8) throw std::runtime_error(path.string() + ": line " + std::to_string(n) + ": expected 8 fields");
    Impression r;
    r.impression_id = csv::parse<std::uint64_t>(f[0], n);
    r.user_id = csv::parse<std::uint64_t>(f[1], n);
    r.group = csv::parse<std::uint32_t>(f[2], n);
    r.pi_click = csv::parse<double>(f[3], n);
    r.pi_order = csv::parse<double>(f[4], n);
    r.clicked = csv::parse<int>(f[5], n) != 0;
    r.ordered = csv::parse<int>(f[6], n) != 0;
    r.units = csv::parse<int>(f[7], n);
    if (r.ordered && !r.clicked) {
      throw std::runtime_error(path.string() + ": line " + std::to_string(n) + ": ordered without click");
    }
    log.push_back(r);
  }
  return log;
}

}  // namespace paretoab
