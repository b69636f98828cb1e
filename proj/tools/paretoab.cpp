// paretoab: offline-online metric alignment pipeline.
//
//   paretoab [--config PATH] [--out DIR] [--seed N] [--threads N] [--alpha F] <verb>
//
// Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "paretoab/commands.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pareto-front offline/online metric alignment"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::optional<double> alpha;
  bool print_config = false;
  bool print_schema = false;
  app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (default: out)");
  app.add_option("--seed", seed, "overrides the world, train and experiment seeds (derived from N)");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--alpha", alpha, "significance level of the Wald tests");
  app.add_flag("--print-config", print_config, "print the effective configuration and exit");
  app.add_flag("--print-schema", print_schema, "print the configuration schema and exit");

  app.add_subcommand("generate", "sample a synthetic world and session dataset");
  auto* train = app.add_subcommand("train", "train the preference-conditioned model");
  bool resume = false;
  train->add_flag("--resume", resume, "continue from the existing checkpoint");
  app.add_subcommand("eval-offline", "offline metrics per preference vector");
  app.add_subcommand("simulate", "simulate the A/B experiment");
  app.add_subcommand("analyze", "logistic regressions and Wald tests");
  app.add_subcommand("pipeline", "all stages in sequence");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  paretoab::RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = paretoab::load_config(config_path);
    if (seed) {
      cfg.seeds.world = paretoab::derive_seed(*seed, 0);
      cfg.seeds.train = paretoab::derive_seed(*seed, 1);
      cfg.seeds.experiment = paretoab::derive_seed(*seed, 2);
    }
    if (alpha) cfg.alpha = *alpha;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    cfg.threads = threads;
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  if (print_schema) {
    std::cout << paretoab::config_schema().dump(2) << '\n';
    return 0;
  }
  if (print_config) {
    std::cout << paretoab::to_json(cfg).dump(2) << '\n';
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return kConfigError;
  }

  const std::string verb = app.get_subcommands().front()->get_name();
  try {
    if (verb == "generate") paretoab::cmd_generate(cfg, std::cerr);
    else if (verb == "train") paretoab::cmd_train(cfg, resume, std::cerr);
    else if (verb == "eval-offline") paretoab::cmd_eval_offline(cfg, std::cerr);
    else if (verb == "simulate") paretoab::cmd_simulate(cfg, std::cerr);
    else if (verb == "analyze") paretoab::cmd_analyze(cfg, std::cerr);
    else paretoab::cmd_pipeline(cfg, std::cerr);
  } catch (const paretoab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return 0;
}
