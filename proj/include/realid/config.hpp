#ifndef REALID_CONFIG_HPP_
#define REALID_CONFIG_HPP_

#include <cstdint>
#include <string>

#include "realid/data.hpp"
#include "realid/model.hpp"

namespace realid {

/// Everything a CLI run needs, with one shared seed fanned out to the data
/// generator and the trainer at resolve time.
struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::string out_dir;
  std::string dataset_path;
  std::string checkpoint_path;
  double eval_threshold = 0.5;
  SyntheticSpec data;
  TrainConfig train;
  std::size_t ablate_seeds = 5;
  std::string sweep_param = "lambda1";
  std::size_t sweep_seeds = 3;
};

RunConfig default_run_config();

/// Overlays a JSON config file onto the defaults. Keys are flat and dotted
/// (e.g. "train.learning_rate"); any unknown key is an error so typos
/// cannot silently fall back to defaults.
RunConfig load_run_config(const std::string& path);
void apply_config_text(const std::string& text, RunConfig& config);

/// Copies the shared seed into the data and train sub-configs and derives
/// train.input_dim from the data spec; throws on inconsistent dimensions.
void resolve_run_config(RunConfig& config);

std::string run_config_to_json(const RunConfig& config);

/// Writes <dir>/config.json recording the fully resolved run.
void write_resolved_config(const RunConfig& config, const std::string& dir);

const char* score_mode_name(ScoreMode mode);
ScoreMode parse_score_mode(const std::string& name);

}  // namespace realid

#endif  // REALID_CONFIG_HPP_
