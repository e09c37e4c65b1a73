#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "realid/model.hpp"

namespace realid {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json train_config_to_json(const TrainConfig& cfg) {
  json j;
  j["input_dim"] = cfg.input_dim;
  j["hidden"] = cfg.hidden;
  j["feature_dim"] = cfg.feature_dim;
  j["prototype_count"] = cfg.prototype_count;
  j["batch_per_class"] = cfg.batch_per_class;
  j["epochs"] = cfg.epochs;
  j["learning_rate"] = cfg.learning_rate;
  j["momentum"] = cfg.momentum;
  j["lambda1"] = cfg.weights.lambda1;
  j["lambda2"] = cfg.weights.lambda2;
  j["lambda3"] = cfg.weights.lambda3;
  j["alpha"] = cfg.weights.alpha;
  j["beta"] = cfg.weights.beta;
  j["seed"] = cfg.seed;
  j["enable_realc2"] = cfg.enable_realc2;
  j["enable_idc"] = cfg.enable_idc;
  j["symmetric_fake_losses"] = cfg.symmetric_fake_losses;
  j["normalize_features"] = cfg.normalize_features;
  j["score_mode"] = cfg.score_mode == ScoreMode::kRaw ? "raw" : "renormalized";
  return j;
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig cfg;
  cfg.input_dim = j.at("input_dim").get<std::size_t>();
  cfg.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  cfg.feature_dim = j.at("feature_dim").get<std::size_t>();
  cfg.prototype_count = j.at("prototype_count").get<std::size_t>();
  cfg.batch_per_class = j.at("batch_per_class").get<std::size_t>();
  cfg.epochs = j.at("epochs").get<std::size_t>();
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.momentum = j.at("momentum").get<double>();
  cfg.weights.lambda1 = j.at("lambda1").get<double>();
  cfg.weights.lambda2 = j.at("lambda2").get<double>();
  cfg.weights.lambda3 = j.at("lambda3").get<double>();
  cfg.weights.alpha = j.at("alpha").get<double>();
  cfg.weights.beta = j.at("beta").get<double>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.enable_realc2 = j.at("enable_realc2").get<bool>();
  cfg.enable_idc = j.at("enable_idc").get<bool>();
  cfg.symmetric_fake_losses = j.at("symmetric_fake_losses").get<bool>();
  cfg.normalize_features = j.at("normalize_features").get<bool>();
  std::string mode = j.at("score_mode").get<std::string>();
  if (mode == "raw") {
    cfg.score_mode = ScoreMode::kRaw;
  } else if (mode == "renormalized") {
    cfg.score_mode = ScoreMode::kRenormalized;
  } else {
    throw std::runtime_error("checkpoint: unknown score_mode '" + mode + "'");
  }
  return cfg;
}

Matrix vector_as_row(const Vector& v) {
  Matrix m(1, v.size());
  for (std::size_t i = 0; i < v.size(); ++i) m(0, i) = v[i];
  return m;
}

}  // namespace

void save_checkpoint(const TrainState& state, const std::string& dir) {
  fs::create_directories(dir);
  json files;
  for (std::size_t l = 0; l < state.extractor.weights.size(); ++l) {
    std::string wname = "extractor_w" + std::to_string(l) + ".csv";
    std::string bname = "extractor_b" + std::to_string(l) + ".csv";
    write_matrix_csv(state.extractor.weights[l], dir + "/" + wname);
    write_matrix_csv(vector_as_row(state.extractor.biases[l]), dir + "/" + bname);
    files["extractor_w" + std::to_string(l)] = wname;
    files["extractor_b" + std::to_string(l)] = bname;
  }
  write_matrix_csv(state.head.weight, dir + "/head_w.csv");
  write_matrix_csv(vector_as_row(state.head.bias), dir + "/head_b.csv");
  files["head_w"] = "head_w.csv";
  files["head_b"] = "head_b.csv";
  save_bank_csv(state.real_bank, dir + "/bank_real.csv");
  save_bank_csv(state.fake_bank, dir + "/bank_fake.csv");
  files["bank_real"] = "bank_real.csv";
  files["bank_fake"] = "bank_fake.csv";

  json manifest;
  manifest["architecture"]["input_dim"] = state.config.input_dim;
  manifest["architecture"]["hidden"] = state.config.hidden;
  manifest["architecture"]["feature_dim"] = state.config.feature_dim;
  manifest["architecture"]["head_outputs"] = state.head.weight.rows;
  manifest["architecture"]["layers"] = state.extractor.weights.size();
  manifest["train"] = train_config_to_json(state.config);
  manifest["files"] = files;

  std::ofstream out(dir + "/manifest.json", std::ios::binary);
  if (!out) throw std::runtime_error(dir + "/manifest.json: cannot open for writing");
  out << manifest.dump(2) << "\n";
}

TrainState load_checkpoint(const std::string& manifest_path) {
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw std::runtime_error(manifest_path + ": cannot open for reading");
  json manifest;
  try {
    in >> manifest;
  } catch (const json::parse_error& e) {
    throw std::runtime_error(manifest_path + ": " + e.what());
  }
  const std::string dir = fs::path(manifest_path).parent_path().string();
  auto resolve = [&](const std::string& key) {
    std::string name = manifest.at("files").at(key).get<std::string>();
    return dir.empty() ? name : dir + "/" + name;
  };

  TrainConfig cfg = train_config_from_json(manifest.at("train"));
  TrainState state = init_train_state(cfg);

  const std::size_t layers = manifest.at("architecture").at("layers").get<std::size_t>();
  if (layers != state.extractor.weights.size()) {
    throw std::runtime_error(manifest_path + ": layer count does not match config");
  }
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix w = read_matrix_csv(resolve("extractor_w" + std::to_string(l)));
    Matrix b = read_matrix_csv(resolve("extractor_b" + std::to_string(l)));
    if (w.rows != state.extractor.weights[l].rows || w.cols != state.extractor.weights[l].cols ||
        b.rows != 1 || b.cols != state.extractor.biases[l].size()) {
      throw std::runtime_error(manifest_path + ": tensor shape mismatch in layer " +
                               std::to_string(l));
    }
    state.extractor.weights[l] = std::move(w);
    state.extractor.biases[l] = b.row(0);
  }
  Matrix hw = read_matrix_csv(resolve("head_w"));
  Matrix hb = read_matrix_csv(resolve("head_b"));
  if (hw.rows != state.head.weight.rows || hw.cols != state.head.weight.cols || hb.rows != 1 ||
      hb.cols != state.head.bias.size()) {
    throw std::runtime_error(manifest_path + ": head tensor shape mismatch");
  }
  state.head.weight = std::move(hw);
  state.head.bias = hb.row(0);
  state.real_bank = load_bank_csv(resolve("bank_real"));
  state.fake_bank = load_bank_csv(resolve("bank_fake"));
  return state;
}

}  // namespace realid
