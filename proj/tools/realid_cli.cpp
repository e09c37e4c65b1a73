#include <cinttypes>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "realid/config.hpp"
#include "realid/csv.hpp"
#include "realid/data.hpp"
#include "realid/eval.hpp"
#include "realid/experiments.hpp"
#include "realid/gradcheck.hpp"
#include "realid/model.hpp"

namespace {

using namespace realid;
namespace fs = std::filesystem;

// Flag values live here; a flag only wins over the config file when it was
// actually passed on the command line (checked through Option::count).
struct CliFlags {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string dataset_path;
  std::string checkpoint_path;
  std::size_t jobs = 1;
  std::size_t epochs = 0;
  std::size_t batch = 0;
  std::size_t prototypes = 0;
  double learning_rate = 0.0;
  double momentum = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double lambda3 = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double threshold = 0.0;
  bool no_realc2 = false;
  bool no_idc = false;
  bool normalize_features = false;
  bool symmetric_fake_losses = false;
  std::string score_mode;
  bool export_embeddings = false;
  std::size_t seeds = 0;
  std::string sweep_param;
  std::size_t gradcheck_configs = 120;
  bool corrupt = false;
};

void add_common_options(CLI::App* cmd, CliFlags& f, bool need_out) {
  cmd->add_option("--config", f.config_path, "JSON config file (flat dotted keys)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "master seed for data, parameters and shuffling");
  auto* out = cmd->add_option("-o,--out", f.out_dir, "output directory");
  if (need_out) out->required();
}

void add_train_options(CLI::App* cmd, CliFlags& f) {
  cmd->add_option("--dataset", f.dataset_path, "dataset CSV (generated from config when absent)");
  cmd->add_option("--epochs", f.epochs, "training epochs");
  cmd->add_option("--batch", f.batch, "samples per class per step");
  cmd->add_option("--lr", f.learning_rate, "SGD learning rate");
  cmd->add_option("--momentum", f.momentum, "SGD momentum");
  cmd->add_option("--k", f.prototypes, "prototypes per memory bank");
  cmd->add_option("--lambda1", f.lambda1, "diversity loss weight");
  cmd->add_option("--lambda2", f.lambda2, "distinction loss weight");
  cmd->add_option("--lambda3", f.lambda3, "dual-decision regularizer weight");
  cmd->add_option("--alpha", f.alpha, "diversity margin");
  cmd->add_option("--beta", f.beta, "regularizer corner parameter");
  cmd->add_flag("--no-realc2", f.no_realc2, "disable the prototype memory losses");
  cmd->add_flag("--no-idc", f.no_idc, "disable the dual-decision head (plain 2-way head)");
  cmd->add_flag("--normalize-features", f.normalize_features,
                "L2-normalize features on the memory path");
  cmd->add_flag("--symmetric-fake-losses", f.symmetric_fake_losses,
                "apply memory losses to fake samples against the fake bank too");
  cmd->add_option("--score-mode", f.score_mode, "fake score: raw | renormalized")
      ->check(CLI::IsMember({"raw", "renormalized"}));
  cmd->add_option("--threshold", f.threshold, "decision threshold on the fake score");
}

RunConfig make_run_config(const CLI::App* cmd, const CliFlags& f) {
  RunConfig rc = f.config_path.empty() ? default_run_config() : load_run_config(f.config_path);
  auto passed = [&](const char* name) {
    const CLI::Option* option = cmd->get_option_no_throw(name);
    return option != nullptr && option->count() > 0;
  };
  if (passed("--seed")) rc.seed = f.seed;
  if (passed("--out")) rc.out_dir = f.out_dir;
  if (passed("--dataset")) rc.dataset_path = f.dataset_path;
  if (passed("--checkpoint")) rc.checkpoint_path = f.checkpoint_path;
  if (passed("--jobs")) rc.jobs = f.jobs;
  if (passed("--epochs")) rc.train.epochs = f.epochs;
  if (passed("--batch")) rc.train.batch_per_class = f.batch;
  if (passed("--lr")) rc.train.learning_rate = f.learning_rate;
  if (passed("--momentum")) rc.train.momentum = f.momentum;
  if (passed("--k")) rc.train.prototype_count = f.prototypes;
  if (passed("--lambda1")) rc.train.weights.lambda1 = f.lambda1;
  if (passed("--lambda2")) rc.train.weights.lambda2 = f.lambda2;
  if (passed("--lambda3")) rc.train.weights.lambda3 = f.lambda3;
  if (passed("--alpha")) rc.train.weights.alpha = f.alpha;
  if (passed("--beta")) rc.train.weights.beta = f.beta;
  if (passed("--no-realc2")) rc.train.enable_realc2 = false;
  if (passed("--no-idc")) rc.train.enable_idc = false;
  if (passed("--normalize-features")) rc.train.normalize_features = true;
  if (passed("--symmetric-fake-losses")) rc.train.symmetric_fake_losses = true;
  if (passed("--score-mode")) rc.train.score_mode = parse_score_mode(f.score_mode);
  if (passed("--threshold")) rc.eval_threshold = f.threshold;
  if (passed("--seeds")) rc.ablate_seeds = rc.sweep_seeds = f.seeds;
  if (passed("--param")) rc.sweep_param = f.sweep_param;
  resolve_run_config(rc);
  return rc;
}

SyntheticDataset obtain_dataset(RunConfig& rc) {
  if (!rc.dataset_path.empty()) {
    SyntheticDataset dataset = read_dataset_csv(rc.dataset_path);
    rc.train.input_dim = dataset.input_dim;
    return dataset;
  }
  return generate(rc.data);
}

void print_split(const char* name, const std::vector<Sample>& split) {
  std::size_t reals = 0;
  for (const Sample& s : split) reals += s.label == 0 ? 1 : 0;
  std::printf("%-17s %6zu rows (%zu real, %zu fake)\n", name, split.size(), reals,
              split.size() - reals);
}

int cmd_synth(const CLI::App* cmd, const CliFlags& f) {
  RunConfig rc = make_run_config(cmd, f);
  const SyntheticDataset dataset = generate(rc.data);
  fs::create_directories(rc.out_dir);
  write_dataset_csv(dataset, rc.out_dir + "/dataset.csv");
  write_resolved_config(rc, rc.out_dir);
  print_split("train:", dataset.train);
  print_split("test_iid:", dataset.test_iid);
  print_split("shifted_real:", dataset.shifted_real);
  print_split("misartifact_real:", dataset.misartifact_real);
  std::printf("real_within_mode_cov_trace: %s\n",
              format_g17(dataset.real_within_mode_cov_trace).c_str());
  std::printf("fake_cov_trace:             %s\n", format_g17(dataset.fake_cov_trace).c_str());
  std::printf("confound_projection:        %s\n",
              format_g17(dataset.confound_projection).c_str());
  std::printf("wrote %s/dataset.csv\n", rc.out_dir.c_str());
  return 0;
}

void write_metrics(const MetricsReport& metrics, const std::string& dir) {
  fs::create_directories(dir);
  FileWriter writer(dir + "/metrics.json");
  const std::string text = metrics_to_json(metrics);
  std::fprintf(writer.get(), "%s", text.c_str());
}

void print_metrics(const MetricsReport& metrics) {
  std::printf("combined auc=%.6f accuracy=%.6f fpr_real=%.6f\n", metrics.auc, metrics.accuracy,
              metrics.fpr_real);
  std::printf("shifted_real fpr=%.6f  misartifact_real fpr=%.6f\n",
              metrics.shifted_real.fpr_real, metrics.misartifact_real.fpr_real);
}

int cmd_train(const CLI::App* cmd, const CliFlags& f) {
  RunConfig rc = make_run_config(cmd, f);
  const SyntheticDataset dataset = obtain_dataset(rc);
  const TrainResult result = train(rc.train, dataset);
  const MetricsReport metrics = evaluate_model(result.state, dataset, rc.eval_threshold);
  fs::create_directories(rc.out_dir);
  write_resolved_config(rc, rc.out_dir);
  write_history_csv(result.history, rc.out_dir + "/history.csv");
  write_metrics(metrics, rc.out_dir);
  save_checkpoint(result.state, rc.out_dir + "/checkpoint");
  if (f.export_embeddings) {
    export_embeddings(result.state, dataset, rc.out_dir + "/embeddings.csv");
  }
  std::printf("trained %zu epochs (variant %s, seed %" PRIu64 ")\n", result.history.size(),
              variant_name(rc.train.enable_realc2, rc.train.enable_idc).c_str(), rc.seed);
  print_metrics(metrics);
  return 0;
}

int cmd_eval(const CLI::App* cmd, const CliFlags& f) {
  RunConfig rc = make_run_config(cmd, f);
  std::string manifest = rc.checkpoint_path;
  if (fs::is_directory(manifest)) manifest += "/manifest.json";
  const TrainState state = load_checkpoint(manifest);
  rc.train = state.config;
  const SyntheticDataset dataset = obtain_dataset(rc);
  const MetricsReport metrics = evaluate_model(state, dataset, rc.eval_threshold);
  write_metrics(metrics, rc.out_dir);
  if (f.export_embeddings) {
    export_embeddings(state, dataset, rc.out_dir + "/embeddings.csv");
  }
  print_metrics(metrics);
  return 0;
}

int cmd_ablate(const CLI::App* cmd, const CliFlags& f) {
  RunConfig rc = make_run_config(cmd, f);
  const SyntheticDataset dataset = obtain_dataset(rc);
  AblationOptions options;
  options.seeds = rc.ablate_seeds;
  options.seed_base = rc.seed + 1;
  options.jobs = rc.jobs;
  options.threshold = rc.eval_threshold;
  options.out_dir = rc.out_dir;
  fs::create_directories(rc.out_dir);
  write_resolved_config(rc, rc.out_dir);
  const std::vector<VariantResult> results = run_ablation(rc.train, dataset, options);
  write_ablation_csv(results, rc.out_dir + "/ablation.csv");
  std::printf("wrote %s/ablation.csv (%zu runs)\n", rc.out_dir.c_str(), results.size());
  return 0;
}

int cmd_sweep(const CLI::App* cmd, const CliFlags& f) {
  RunConfig rc = make_run_config(cmd, f);
  const SyntheticDataset dataset = obtain_dataset(rc);
  SweepOptions options;
  options.param = rc.sweep_param;
  options.seeds = rc.sweep_seeds;
  options.seed_base = rc.seed + 1;
  options.jobs = rc.jobs;
  options.threshold = rc.eval_threshold;
  options.out_dir = rc.out_dir;
  fs::create_directories(rc.out_dir);
  write_resolved_config(rc, rc.out_dir);
  const std::vector<SweepRow> rows = run_sweep(rc.train, dataset, options);
  const std::string path = rc.out_dir + "/sweep_" + options.param + ".csv";
  write_sweep_csv(options.param, rows, path);
  std::printf("wrote %s (%zu grid points)\n", path.c_str(), rows.size());
  return 0;
}

int cmd_gradcheck(const CliFlags& f) {
  const std::vector<GradSuiteResult> results =
      run_gradcheck(f.seed, f.gradcheck_configs, f.corrupt);
  for (const GradSuiteResult& r : results) {
    std::printf("suite %-16s configs=%zu max_rel_err=%.3e %s\n", r.name.c_str(), r.configs,
                r.max_rel_err, r.pass ? "pass" : "FAIL");
  }
  const bool ok = gradcheck_passed(results);
  std::printf("gradcheck: %s\n", ok ? "pass" : "FAIL");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prototype-memory deepfake detector: synthetic data, training, evaluation"};
  app.require_subcommand(1);
  CliFlags f;

  CLI::App* synth = app.add_subcommand("synth", "generate the synthetic dataset CSV");
  add_common_options(synth, f, true);

  CLI::App* train_cmd = app.add_subcommand("train", "train a detector and write metrics");
  add_common_options(train_cmd, f, true);
  add_train_options(train_cmd, f);
  train_cmd->add_flag("--export-embeddings", f.export_embeddings,
                      "also write per-sample features and scores");

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a saved checkpoint");
  add_common_options(eval_cmd, f, true);
  eval_cmd->add_option("--checkpoint", f.checkpoint_path, "checkpoint directory or manifest")
      ->required();
  eval_cmd->add_option("--dataset", f.dataset_path,
                       "dataset CSV (generated from config when absent)");
  eval_cmd->add_option("--threshold", f.threshold, "decision threshold on the fake score");
  eval_cmd->add_flag("--export-embeddings", f.export_embeddings,
                     "also write per-sample features and scores");

  CLI::App* ablate = app.add_subcommand("ablate", "module on/off grid across seeds");
  add_common_options(ablate, f, true);
  add_train_options(ablate, f);
  ablate->add_option("--seeds", f.seeds, "seeds per variant");
  ablate->add_option("--jobs", f.jobs, "parallel worker threads");

  CLI::App* sweep = app.add_subcommand("sweep", "hyperparameter sweep for the full model");
  add_common_options(sweep, f, true);
  add_train_options(sweep, f);
  sweep->add_option("--param", f.sweep_param, "lambda1|lambda2|lambda3|alpha|beta|K");
  sweep->add_option("--seeds", f.seeds, "seeds per grid point");
  sweep->add_option("--jobs", f.jobs, "parallel worker threads");

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient audit");
  gradcheck->add_option("--seed", f.seed, "probe seed");
  gradcheck->add_option("--configs", f.gradcheck_configs, "random configurations per suite");
  gradcheck->add_flag("--corrupt", f.corrupt, "inject a known gradient error (self-test)")
      ->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth, f);
    if (train_cmd->parsed()) return cmd_train(train_cmd, f);
    if (eval_cmd->parsed()) return cmd_eval(eval_cmd, f);
    if (ablate->parsed()) return cmd_ablate(ablate, f);
    if (sweep->parsed()) return cmd_sweep(sweep, f);
    if (gradcheck->parsed()) return cmd_gradcheck(f);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  std::fprintf(stderr, "error: no subcommand\n");
  return 2;
}
