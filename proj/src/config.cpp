#include "realid/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "realid/experiments.hpp"

namespace realid {

using nlohmann::json;

const char* score_mode_name(ScoreMode mode) {
  return mode == ScoreMode::kRenormalized ? "renormalized" : "raw";
}

ScoreMode parse_score_mode(const std::string& name) {
  if (name == "raw") return ScoreMode::kRaw;
  if (name == "renormalized") return ScoreMode::kRenormalized;
  throw std::invalid_argument("score_mode must be 'raw' or 'renormalized', got '" + name + "'");
}

RunConfig default_run_config() {
  RunConfig config;
  config.data = default_spec();
  return config;
}

namespace {

json mode_to_json(const GaussianMode& mode) {
  return json{{"mean", mode.mean}, {"stddev", mode.stddev}, {"count", mode.count}};
}

GaussianMode mode_from_json(const json& j, const std::string& key) {
  if (!j.is_object()) throw std::runtime_error(key + " must be an object");
  GaussianMode mode;
  for (const auto& [field, value] : j.items()) {
    if (field == "mean") {
      mode.mean = value.get<Vector>();
    } else if (field == "stddev") {
      mode.stddev = value.get<double>();
    } else if (field == "count") {
      mode.count = value.get<std::size_t>();
    } else {
      throw std::runtime_error("unknown key '" + key + "." + field + "'");
    }
  }
  return mode;
}

template <typename T>
void assign(const json& value, const std::string& key, T& out) {
  try {
    out = value.get<T>();
  } catch (const json::exception& e) {
    throw std::runtime_error("bad value for '" + key + "': " + e.what());
  }
}

}  // namespace

void apply_config_text(const std::string& text, RunConfig& config) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw std::runtime_error("config root must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (key == "seed") {
      assign(value, key, config.seed);
    } else if (key == "jobs") {
      assign(value, key, config.jobs);
    } else if (key == "out") {
      assign(value, key, config.out_dir);
    } else if (key == "dataset") {
      assign(value, key, config.dataset_path);
    } else if (key == "checkpoint") {
      assign(value, key, config.checkpoint_path);
    } else if (key == "eval.threshold") {
      assign(value, key, config.eval_threshold);
    } else if (key == "data.real_modes") {
      if (!value.is_array()) throw std::runtime_error("data.real_modes must be an array");
      config.data.real_modes.clear();
      for (const auto& item : value) {
        config.data.real_modes.push_back(mode_from_json(item, "data.real_modes[]"));
      }
    } else if (key == "data.fake") {
      config.data.fake = mode_from_json(value, key);
    } else if (key == "data.shifted_real") {
      config.data.shifted_real = mode_from_json(value, key);
    } else if (key == "data.misartifact.direction") {
      assign(value, key, config.data.artifact_direction);
    } else if (key == "data.misartifact.gamma") {
      assign(value, key, config.data.artifact_gamma);
    } else if (key == "data.misartifact.fraction") {
      assign(value, key, config.data.artifact_fraction);
    } else if (key == "data.misartifact.fake_fraction") {
      assign(value, key, config.data.fake_artifact_fraction);
    } else if (key == "data.misartifact.fake_jitter") {
      assign(value, key, config.data.fake_artifact_jitter);
    } else if (key == "model.hidden") {
      assign(value, key, config.train.hidden);
    } else if (key == "model.feature_dim") {
      assign(value, key, config.train.feature_dim);
    } else if (key == "model.prototype_count") {
      assign(value, key, config.train.prototype_count);
    } else if (key == "train.epochs") {
      assign(value, key, config.train.epochs);
    } else if (key == "train.batch_per_class") {
      assign(value, key, config.train.batch_per_class);
    } else if (key == "train.learning_rate") {
      assign(value, key, config.train.learning_rate);
    } else if (key == "train.momentum") {
      assign(value, key, config.train.momentum);
    } else if (key == "train.enable_realc2") {
      assign(value, key, config.train.enable_realc2);
    } else if (key == "train.enable_idc") {
      assign(value, key, config.train.enable_idc);
    } else if (key == "train.symmetric_fake_losses") {
      assign(value, key, config.train.symmetric_fake_losses);
    } else if (key == "train.normalize_features") {
      assign(value, key, config.train.normalize_features);
    } else if (key == "train.score_mode") {
      std::string name;
      assign(value, key, name);
      config.train.score_mode = parse_score_mode(name);
    } else if (key == "loss.lambda1") {
      assign(value, key, config.train.weights.lambda1);
    } else if (key == "loss.lambda2") {
      assign(value, key, config.train.weights.lambda2);
    } else if (key == "loss.lambda3") {
      assign(value, key, config.train.weights.lambda3);
    } else if (key == "loss.alpha") {
      assign(value, key, config.train.weights.alpha);
    } else if (key == "loss.beta") {
      assign(value, key, config.train.weights.beta);
    } else if (key == "ablate.seeds") {
      assign(value, key, config.ablate_seeds);
    } else if (key == "sweep.param") {
      assign(value, key, config.sweep_param);
    } else if (key == "sweep.seeds") {
      assign(value, key, config.sweep_seeds);
    } else {
      throw std::runtime_error("unknown config key '" + key + "'");
    }
  }
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  RunConfig config = default_run_config();
  apply_config_text(buffer.str(), config);
  return config;
}

void resolve_run_config(RunConfig& config) {
  config.data.seed = config.seed;
  config.train.seed = config.seed;
  if (config.data.real_modes.empty()) {
    throw std::runtime_error("data.real_modes must not be empty");
  }
  const std::size_t dim = config.data.real_modes.front().mean.size();
  for (const GaussianMode& mode : config.data.real_modes) {
    if (mode.mean.size() != dim) throw std::runtime_error("real mode dimensions disagree");
  }
  if (config.data.fake.mean.size() != dim || config.data.shifted_real.mean.size() != dim ||
      config.data.artifact_direction.size() != dim) {
    throw std::runtime_error("data vectors must share one dimension");
  }
  config.train.input_dim = dim;
}

std::string run_config_to_json(const RunConfig& config) {
  json j;
  j["seed"] = config.seed;
  j["jobs"] = config.jobs;
  j["out"] = config.out_dir;
  j["dataset"] = config.dataset_path;
  j["checkpoint"] = config.checkpoint_path;
  j["eval.threshold"] = config.eval_threshold;
  json modes = json::array();
  for (const GaussianMode& mode : config.data.real_modes) modes.push_back(mode_to_json(mode));
  j["data.real_modes"] = modes;
  j["data.fake"] = mode_to_json(config.data.fake);
  j["data.shifted_real"] = mode_to_json(config.data.shifted_real);
  j["data.misartifact.direction"] = config.data.artifact_direction;
  j["data.misartifact.gamma"] = config.data.artifact_gamma;
  j["data.misartifact.fraction"] = config.data.artifact_fraction;
  j["data.misartifact.fake_fraction"] = config.data.fake_artifact_fraction;
  j["data.misartifact.fake_jitter"] = config.data.fake_artifact_jitter;
  j["model.hidden"] = config.train.hidden;
  j["model.feature_dim"] = config.train.feature_dim;
  j["model.prototype_count"] = config.train.prototype_count;
  j["train.epochs"] = config.train.epochs;
  j["train.batch_per_class"] = config.train.batch_per_class;
  j["train.learning_rate"] = config.train.learning_rate;
  j["train.momentum"] = config.train.momentum;
  j["train.enable_realc2"] = config.train.enable_realc2;
  j["train.enable_idc"] = config.train.enable_idc;
  j["train.symmetric_fake_losses"] = config.train.symmetric_fake_losses;
  j["train.normalize_features"] = config.train.normalize_features;
  j["train.score_mode"] = score_mode_name(config.train.score_mode);
  j["loss.lambda1"] = config.train.weights.lambda1;
  j["loss.lambda2"] = config.train.weights.lambda2;
  j["loss.lambda3"] = config.train.weights.lambda3;
  j["loss.alpha"] = config.train.weights.alpha;
  j["loss.beta"] = config.train.weights.beta;
  j["ablate.seeds"] = config.ablate_seeds;
  j["sweep.param"] = config.sweep_param;
  j["sweep.seeds"] = config.sweep_seeds;
  j["variant"] = variant_name(config.train.enable_realc2, config.train.enable_idc);
  return j.dump(2) + "\n";
}

void write_resolved_config(const RunConfig& config, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir + "/config.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + dir + "/config.json");
  out << run_config_to_json(config);
}

}  // namespace realid
