#ifndef REALID_EXPERIMENTS_HPP_
#define REALID_EXPERIMENTS_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "realid/eval.hpp"
#include "realid/model.hpp"

namespace realid {

struct VariantSpec {
  std::string name;
  bool realc2 = false;
  bool idc = false;
};

/// baseline, realc2, idc, full — the module on/off grid.
std::vector<VariantSpec> ablation_variants();

/// Name for a flag combination (used to label run artifacts).
std::string variant_name(bool realc2, bool idc);

TrainConfig make_variant_config(const TrainConfig& base, const VariantSpec& variant,
                                std::uint64_t seed);

/// Train on the train split, evaluate on the test splits.
MetricsReport run_single(const TrainConfig& config, const SyntheticDataset& dataset,
                         double threshold);

struct VariantResult {
  VariantSpec variant;
  std::uint64_t seed = 0;
  MetricsReport metrics;
};

struct AblationOptions {
  std::size_t seeds = 5;
  std::uint64_t seed_base = 1;  // seeds are seed_base .. seed_base+seeds-1
  std::size_t jobs = 1;
  double threshold = 0.5;
  std::string out_dir;  // per-seed metrics land here when non-empty
};

/// Every variant at every seed, fanned out over jobs; results come back in
/// deterministic (variant, seed) order regardless of scheduling.
std::vector<VariantResult> run_ablation(const TrainConfig& base, const SyntheticDataset& dataset,
                                        const AblationOptions& options);

/// variant x split rows with seed-mean AUC and fpr_real.
void write_ablation_csv(const std::vector<VariantResult>& results, const std::string& path);

struct SweepOptions {
  std::string param = "lambda1";  // lambda1|lambda2|lambda3|alpha|beta|K
  std::size_t seeds = 3;
  std::uint64_t seed_base = 1;
  std::size_t jobs = 1;
  double threshold = 0.5;
  std::string out_dir;  // enables resume: finished grid points are skipped
};

std::vector<double> sweep_grid(const std::string& param);

/// Full-model run at one grid value of the swept parameter. Lambda sweeps
/// hold the other two lambdas at 0.5.
TrainConfig make_sweep_config(const TrainConfig& base, const std::string& param, double value,
                              std::uint64_t seed);

struct SweepRow {
  double value = 0.0;
  std::size_t seeds = 0;
  double mean_auc = 0.0;       // combined test set
  double mean_fpr_real = 0.0;  // combined test set
  TrainConfig config;          // resolved config at this grid point (first seed)
};

std::vector<SweepRow> run_sweep(const TrainConfig& base, const SyntheticDataset& dataset,
                                const SweepOptions& options);

void write_sweep_csv(const std::string& param, const std::vector<SweepRow>& rows,
                     const std::string& path);

/// Runs fn(0..count-1) across up to jobs worker threads.
void parallel_for_index(std::size_t count, std::size_t jobs,
                        const std::function<void(std::size_t)>& fn);

}  // namespace realid

#endif  // REALID_EXPERIMENTS_HPP_
