#include "paretoab/config.hpp"

#include <fstream>
#include <sstream>

namespace paretoab {

using nlohmann::json;
using nlohmann::ordered_json;

Hyperparams RunConfig::hyperparams() const {
  Hyperparams hp;
  hp.catalog_size = world.catalog_size;
  hp.embed_dim = embed_dim;
  hp.hidden_dim = hidden_dim;
  hp.pref_dim = static_cast<int>(dirichlet.beta.size());
  hp.max_prefix_len = max_prefix_len;
  hp.position_decay = position_decay;
  hp.seed = seeds.train;
  return hp;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.loss = loss;
  t.dirichlet = dirichlet;
  t.optimizer = optimizer;
  t.seed = seeds.train;
  return t;
}

void RunConfig::validate() const {
  try {
    world.validate();
    hyperparams().validate();
    loss.validate();
    dirichlet.validate();
    optimizer.validate();
    metrics.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (dirichlet.beta.size() != 2) throw ConfigError("loss.dirichlet_beta: exactly two objectives are supported");
  if (n_sessions < 10) throw ConfigError("world.n_sessions must be >= 10");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("world.train_fraction must lie in (0, 1)");
  if (epochs < 0) throw ConfigError("train.epochs must be >= 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (experiment.n_impressions < 1) throw ConfigError("experiment.n_impressions must be >= 1");
  if (experiment.slate_size < 1) throw ConfigError("experiment.slate_size must be >= 1");
  if (!experiment.shares.empty() && experiment.shares.size() != metrics.preferences.size()) {
    throw ConfigError("experiment.shares needs one share per preference in metrics.pi_click");
  }
  if (!(experiment.target_ctr > 0.0 && experiment.target_ctr < 1.0)) {
    throw ConfigError("experiment.target_ctr must lie in (0, 1)");
  }
  if (experiment.pilot_impressions < 100) throw ConfigError("experiment.pilot_impressions must be >= 100");
}

ordered_json to_json(const RunConfig& c) {
  ordered_json j;
  j["world"] = {{"catalog_size", c.world.catalog_size},
                {"latent_dim", c.world.latent_dim},
                {"latent_scale", c.world.latent_scale},
                {"attract_log_std", c.world.attract_log_std},
                {"convert_logit_mean", c.world.convert_logit_mean},
                {"convert_logit_std", c.world.convert_logit_std},
                {"attract_convert_corr", c.world.attract_convert_corr},
                {"mean_session_length", c.world.mean_session_length},
                {"n_sessions", c.n_sessions},
                {"train_fraction", c.train_fraction}};
  j["model"] = {{"embed_dim", c.embed_dim},
                {"hidden_dim", c.hidden_dim},
                {"max_prefix_len", c.max_prefix_len},
                {"position_decay", c.position_decay}};
  j["loss"] = {{"lambda", c.loss.lambda},
               {"n_negatives", c.loss.n_negatives},
               {"use_distortion", c.loss.use_distortion},
               {"exact_softmax_threshold", c.loss.exact_softmax_threshold},
               {"dirichlet_beta", std::vector<double>(c.dirichlet.beta.begin(), c.dirichlet.beta.end())}};
  j["train"] = {{"epochs", c.epochs},
                {"batch_size", c.optimizer.batch_size},
                {"optimizer", c.optimizer.kind == OptimizerConfig::Kind::kAdam ? "adam" : "sgd"},
                {"learning_rate", c.optimizer.learning_rate},
                {"beta1", c.optimizer.beta1},
                {"beta2", c.optimizer.beta2},
                {"epsilon", c.optimizer.epsilon}};
  std::vector<double> pi_click;
  for (const PreferenceVector& p : c.metrics.preferences) pi_click.push_back(p[0]);
  j["metrics"] = {{"k", c.metrics.k}, {"pi_click", pi_click}};
  const ExperimentSettings& e = c.experiment;
  j["experiment"] = {{"n_impressions", e.n_impressions},
                     {"shares", e.shares},
                     {"salt", e.salt},
                     {"slate_size", e.slate_size},
                     {"affinity_scale", e.affinity_scale},
                     {"position_exponent", e.position_exponent},
                     {"click_bias", e.click_bias ? ordered_json(*e.click_bias) : ordered_json(nullptr)},
                     {"target_ctr", e.target_ctr},
                     {"pilot_impressions", e.pilot_impressions}};
  j["seeds"] = {{"world", c.seeds.world}, {"train", c.seeds.train}, {"experiment", c.seeds.experiment}};
  j["alpha"] = c.alpha;
  return j;
}

namespace {

ordered_json schema_of(const ordered_json& value, const std::string& key) {
  ordered_json s;
  if (value.is_object()) {
    s["type"] = "object";
    s["additionalProperties"] = false;
    s["properties"] = ordered_json::object();
    for (const auto& [k, v] : value.items()) s["properties"][k] = schema_of(v, k);
  } else if (value.is_array()) {
    s["type"] = "array";
    s["items"] = {{"type", "number"}};
  } else if (value.is_boolean()) {
    s["type"] = "boolean";
  } else if (value.is_number_integer()) {
    s["type"] = "integer";
    if (value.is_number_unsigned() || key == "epochs") s["minimum"] = 0;
  } else if (value.is_number()) {
    s["type"] = "number";
  } else if (value.is_string()) {
    s["type"] = "string";
  } else if (value.is_null()) {
    s["type"] = ordered_json::array({"number", "null"});
  }
  return s;
}

bool type_matches(const json& v, const std::string& type) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "boolean") return v.is_boolean();
  if (type == "integer") return v.is_number_integer();
  if (type == "number") return v.is_number();
  if (type == "string") return v.is_string();
  if (type == "null") return v.is_null();
  return false;
}

void merge_into(json& base, const json& patch) {
  for (const auto& [k, v] : patch.items()) {
    if (v.is_object() && base.contains(k) && base[k].is_object()) {
      merge_into(base[k], v);
    } else {
      base[k] = v;
    }
  }
}

}  // namespace

ordered_json config_schema() {
  ordered_json s = schema_of(to_json(RunConfig{}), "");
  s["properties"]["train"]["properties"]["optimizer"]["enum"] = {"adam", "sgd"};
  ordered_json root;
  root["$schema"] = "https://json-schema.org/draft/2020-12/schema";
  root["title"] = "paretoab run configuration";
  for (const auto& [k, v] : s.items()) root[k] = v;
  return root;
}

std::string check_schema(const json& doc, const json& schema, const std::string& where) {
  if (schema.contains("type")) {
    const json& t = schema["type"];
    bool ok = false;
    if (t.is_array()) {
      for (const json& alt : t) ok = ok || type_matches(doc, alt.get<std::string>());
    } else {
      ok = type_matches(doc, t.get<std::string>());
    }
    if (!ok) return where + ": expected " + t.dump() + ", got " + doc.type_name();
  }
  if (schema.contains("enum")) {
    bool ok = false;
    for (const json& e : schema["enum"]) ok = ok || e == doc;
    if (!ok) return where + ": must be one of " + schema["enum"].dump();
  }
  if (schema.contains("minimum") && doc.is_number() && doc.get<double>() < schema["minimum"].get<double>()) {
    return where + ": must be >= " + schema["minimum"].dump();
  }
  if (doc.is_object() && schema.contains("properties")) {
    for (const auto& [k, v] : doc.items()) {
      if (!schema["properties"].contains(k)) {
        if (schema.value("additionalProperties", true) == false) return where + ": unknown key \"" + k + "\"";
        continue;
      }
      std::string err = check_schema(v, schema["properties"][k], where + "." + k);
      if (!err.empty()) return err;
    }
  }
  if (doc.is_array() && schema.contains("items")) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      std::string err = check_schema(doc[i], schema["items"], where + "[" + std::to_string(i) + "]");
      if (!err.empty()) return err;
    }
  }
  return {};
}

RunConfig config_from_json(const json& doc) {
  const std::string err = check_schema(doc, json(config_schema()));
  if (!err.empty()) throw ConfigError("config " + err);

  json j = json(to_json(RunConfig{}));
  merge_into(j, doc);

  RunConfig c;
  const json& w = j["world"];
  c.world.catalog_size = w["catalog_size"].get<std::int64_t>();
  c.world.latent_dim = w["latent_dim"].get<int>();
  c.world.latent_scale = w["latent_scale"].get<double>();
  c.world.attract_log_std = w["attract_log_std"].get<double>();
  c.world.convert_logit_mean = w["convert_logit_mean"].get<double>();
  c.world.convert_logit_std = w["convert_logit_std"].get<double>();
  c.world.attract_convert_corr = w["attract_convert_corr"].get<double>();
  c.world.mean_session_length = w["mean_session_length"].get<double>();
  c.n_sessions = w["n_sessions"].get<std::size_t>();
  c.train_fraction = w["train_fraction"].get<double>();

  const json& m = j["model"];
  c.embed_dim = m["embed_dim"].get<int>();
  c.hidden_dim = m["hidden_dim"].get<int>();
  c.max_prefix_len = m["max_prefix_len"].get<int>();
  c.position_decay = m["position_decay"].get<double>();

  const json& l = j["loss"];
  c.loss.lambda = l["lambda"].get<double>();
  c.loss.n_negatives = l["n_negatives"].get<int>();
  c.loss.use_distortion = l["use_distortion"].get<bool>();
  c.loss.exact_softmax_threshold = l["exact_softmax_threshold"].get<std::int64_t>();
  const auto beta = l["dirichlet_beta"].get<std::vector<double>>();
  c.dirichlet.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));

  const json& t = j["train"];
  c.epochs = t["epochs"].get<int>();
  c.optimizer.batch_size = t["batch_size"].get<int>();
  c.optimizer.kind = t["optimizer"].get<std::string>() == "sgd" ? OptimizerConfig::Kind::kSgd
                                                                : OptimizerConfig::Kind::kAdam;
  c.optimizer.learning_rate = t["learning_rate"].get<double>();
  c.optimizer.beta1 = t["beta1"].get<double>();
  c.optimizer.beta2 = t["beta2"].get<double>();
  c.optimizer.epsilon = t["epsilon"].get<double>();

  const json& mt = j["metrics"];
  c.metrics.k = mt["k"].get<int>();
  c.metrics.preferences.clear();
  for (double pc : mt["pi_click"].get<std::vector<double>>()) {
    if (!(pc >= 0.0 && pc <= 1.0)) throw ConfigError("metrics.pi_click entries must lie in [0, 1]");
    c.metrics.preferences.push_back(PreferenceVector::click_weight(pc));
  }

  const json& e = j["experiment"];
  c.experiment.n_impressions = e["n_impressions"].get<std::size_t>();
  c.experiment.shares = e["shares"].get<std::vector<double>>();
  c.experiment.salt = e["salt"].get<std::uint64_t>();
  c.experiment.slate_size = e["slate_size"].get<int>();
  c.experiment.affinity_scale = e["affinity_scale"].get<double>();
  c.experiment.position_exponent = e["position_exponent"].get<double>();
  if (!e["click_bias"].is_null()) c.experiment.click_bias = e["click_bias"].get<double>();
  c.experiment.target_ctr = e["target_ctr"].get<double>();
  c.experiment.pilot_impressions = e["pilot_impressions"].get<std::size_t>();

  const json& s = j["seeds"];
  c.seeds.world = s["world"].get<std::uint64_t>();
  c.seeds.train = s["train"].get<std::uint64_t>();
  c.seeds.experiment = s["experiment"].get<std::uint64_t>();
  c.alpha = j["alpha"].get<double>();

  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(doc);
}

}  // namespace paretoab
