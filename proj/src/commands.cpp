#include "paretoab/commands.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

#include "paretoab/checkpoint.hpp"
#include "paretoab/csv.hpp"
#include "paretoab/dataset_io.hpp"

namespace paretoab {

namespace fs = std::filesystem;

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir.string());
}

void require_file(const fs::path& p, const char* what) {
  if (!fs::exists(p)) throw std::runtime_error(std::string("missing ") + what + ": " + p.string());
}

// Keeps the pilot streams apart from the experiment's own derive_seed(seed, i).
constexpr std::uint64_t kPilotSalt = 0x70696c6f74ULL;

}  // namespace

ExperimentConfig experiment_config(const RunConfig& cfg) {
  ExperimentConfig e;
  const std::size_t g = cfg.metrics.preferences.size();
  e.assignment = cfg.experiment.shares.empty() ? GroupAssignment::uniform(g, cfg.experiment.salt)
                                               : GroupAssignment{cfg.experiment.shares, cfg.experiment.salt};
  e.preferences = cfg.metrics.preferences;
  e.n_impressions = cfg.experiment.n_impressions;
  e.slate_size = cfg.experiment.slate_size;
  e.click.affinity_scale = cfg.experiment.affinity_scale;
  e.click.position_exponent = cfg.experiment.position_exponent;
  if (cfg.experiment.click_bias) e.click.bias = *cfg.experiment.click_bias;
  return e;
}

void cmd_generate(const RunConfig& cfg, std::ostream& log) {
  const Artifacts a{cfg.out_dir};
  ensure_dir(a.dir);
  const World world = generate_world(cfg.world, cfg.seeds.world);
  Dataset all = sample_sessions(world, cfg.n_sessions, derive_seed(cfg.seeds.world, 1));

  std::vector<Timestamp> starts;
  starts.reserve(all.sessions.size());
  for (const ClickOrderSession& s : all.sessions) starts.push_back(s.start_ts);
  std::sort(starts.begin(), starts.end());
  const auto q = std::min(starts.size() - 1, static_cast<std::size_t>(cfg.train_fraction * static_cast<double>(starts.size())));
  const Timestamp split = starts[q];
  auto [train, test] = temporal_split(all, split);
  train.split_ts = split;
  test.split_ts = split;

  save_world(world, a.world());
  write_sessions(a.train_data(), train);
  write_sessions(a.test_data(), test);
  log << "generate: catalog " << world.catalog_size() << ", corr " << world.measured_corr << ", " << train.sessions.size()
      << " train / " << test.sessions.size() << " test sessions (split ts " << split << ")\n";
}

void cmd_train(const RunConfig& cfg, bool resume, std::ostream& log) {
  const Artifacts a{cfg.out_dir};
  require_file(a.train_data(), "training data");
  const Dataset train_set = parse_sessions(a.train_data());

  Checkpoint ckpt;
  if (resume) {
    require_file(a.checkpoint(), "checkpoint");
    ckpt = load_checkpoint(a.checkpoint());
    require_catalog(ckpt.model, train_set.catalog_size);
  } else {
    Hyperparams hp = cfg.hyperparams();
    hp.catalog_size = train_set.catalog_size;
    ckpt.model = init_model<double>(hp);
  }

  std::ofstream out(a.train_log(), resume ? std::ios::app : std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + a.train_log().string());
  const TrainConfig tc = cfg.train_config();
  const auto on_epoch = [&](const EpochLog& e) {
    write_train_log(out, {e}, tc.loss.use_distortion);
    out.flush();
    log << "train: epoch " << e.epoch << " scalarized " << e.mean.scalarized << " (click " << e.mean.l_click
        << ", order " << e.mean.l_order << ")\n";
  };
  TrainResult r = train(std::move(ckpt.model), make_examples(train_set), tc, cfg.epochs, ckpt.epochs_completed, on_epoch);
  ckpt.model = std::move(r.model);
  ckpt.epochs_completed += static_cast<std::uint32_t>(cfg.epochs);
  save_checkpoint(ckpt, a.checkpoint());
}

std::vector<FrontPoint> cmd_eval_offline(const RunConfig& cfg, std::ostream& log) {
  const Artifacts a{cfg.out_dir};
  require_file(a.checkpoint(), "checkpoint");
  require_file(a.test_data(), "test data");
  const Checkpoint ckpt = load_checkpoint(a.checkpoint());
  const Dataset test = parse_sessions(a.test_data());
  require_catalog(ckpt.model, test.catalog_size);
  std::vector<FrontPoint> front = sweep_front(ckpt.model, test, cfg.metrics, cfg.threads);
  write_front_csv(a.front(), front);
  for (const FrontPoint& p : front) {
    log << "eval-offline: pi_click " << p.pi[0] << " recall@" << cfg.metrics.k << ' ' << p.recall << " od@"
        << cfg.metrics.k << ' ' << p.od << '\n';
  }
  return front;
}

void cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  const Artifacts a{cfg.out_dir};
  require_file(a.world(), "world");
  require_file(a.checkpoint(), "checkpoint");
  const World world = load_world(a.world());
  const Checkpoint ckpt = load_checkpoint(a.checkpoint());
  require_catalog(ckpt.model, world.catalog_size());

  ExperimentConfig ec = experiment_config(cfg);
  const ServingTable table(ckpt.model, ec.preferences, ec.slate_size, cfg.threads);
  const bool calibrated = !cfg.experiment.click_bias.has_value();
  if (calibrated) {
    ec.click.bias = calibrate_click_bias(world, table, ec, cfg.experiment.target_ctr,
                                         mix64(cfg.seeds.experiment ^ kPilotSalt), cfg.experiment.pilot_impressions);
  }
  const std::vector<Impression> impressions = simulate_experiment(world, table, ec, cfg.seeds.experiment, cfg.threads);
  write_impressions_csv(a.impressions(), impressions);

  nlohmann::ordered_json sim;
  sim["click_bias"] = ec.click.bias;
  sim["click_bias_calibrated"] = calibrated;
  sim["n_impressions"] = impressions.size();
  sim["groups"] = nlohmann::ordered_json::array();
  for (const GroupKpis& k : aggregate_kpis(impressions, ec.assignment.groups())) {
    nlohmann::ordered_json g{{"group", k.group},          {"pi_click", ec.preferences[k.group][0]},
                             {"n", k.n},                  {"clicks", k.clicks},
                             {"orders", k.orders},        {"ctr", k.ctr},
                             {"cvr", k.cvr ? nlohmann::ordered_json(*k.cvr) : nlohmann::ordered_json(nullptr)},
                             {"units_total", k.units_total}};
    sim["groups"].push_back(g);
    log << "simulate: group " << k.group << " n " << k.n << " ctr " << k.ctr << " cvr " << k.cvr.value_or(0.0) << '\n';
  }
  std::ofstream out(a.simulation());
  if (!out) throw std::runtime_error("cannot write " + a.simulation().string());
  out << sim.dump(2) << '\n';
}

std::vector<HypothesisRow> cmd_analyze(const RunConfig& cfg, std::ostream& log) {
  const Artifacts a{cfg.out_dir};
  require_file(a.front(), "front");
  require_file(a.impressions(), "impression log");
  const std::vector<FrontPoint> front = read_front_csv(a.front());
  const std::vector<Impression> impressions = read_impressions_csv(a.impressions());
  const std::vector<HypothesisSpec> specs = default_hypotheses();
  const std::vector<HypothesisRow> rows = run_hypotheses(front, impressions, specs, cfg.alpha);

  {
    std::ofstream out(a.report_csv());
    if (!out) throw std::runtime_error("cannot write " + a.report_csv().string());
    write_report_csv(out, rows);
  }
  const std::string table = render_report_table(rows);
  {
    std::ofstream out(a.report_txt());
    out << table;
  }
  const std::vector<FrontPoint> by_group = match_front_to_groups(front, impressions);
  const std::vector<ScatterRow> scatter = scatter_data(by_group, impressions, rows);
  {
    std::ofstream out(a.scatter_csv());
    write_scatter_csv(out, scatter);
  }
  for (const HypothesisRow& r : rows) {
    std::vector<ScatterRow> panel;
    std::copy_if(scatter.begin(), scatter.end(), std::back_inserter(panel),
                 [&](const ScatterRow& s) { return s.hypothesis == r.spec.id; });
    write_scatter_svg(a.figure(r.spec.id), r.spec.id + ": " + predictor_name(r.spec.predictor) + " vs. " +
                                               outcome_name(r.spec.outcome), panel);
  }
  log << table;
  return rows;
}

void cmd_pipeline(const RunConfig& cfg, std::ostream& log) {
  const Artifacts a{cfg.out_dir};
  const auto stage = [&](const char* name, const auto& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      throw StageError(name, e.what());
    }
  };
  stage("generate", [&] {
    ensure_dir(a.dir);
    std::ofstream out(a.config());
    out << to_json(cfg).dump(2) << '\n';
    cmd_generate(cfg, log);
  });
  stage("train", [&] { cmd_train(cfg, false, log); });
  stage("eval-offline", [&] { cmd_eval_offline(cfg, log); });
  stage("simulate", [&] { cmd_simulate(cfg, log); });
  stage("analyze", [&] { cmd_analyze(cfg, log); });
}

}  // namespace paretoab
