#ifndef REALID_DATA_HPP_
#define REALID_DATA_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "realid/numerics.hpp"

namespace realid {

struct GaussianMode {
  Vector mean;
  double stddev = 1.0;
  std::size_t count = 0;
};

/// Recipe for the synthetic failure-mode scenario: several tight real
/// clusters inside one broad fake cloud, plus two stress splits that are
/// real by label but land in fake-looking territory (a shifted cluster and
/// an additive artifact direction that correlates with the fake class).
struct SyntheticSpec {
  std::vector<GaussianMode> real_modes;
  GaussianMode fake;
  GaussianMode shifted_real;     // test-only cluster
  Vector artifact_direction;     // unit vector a
  double artifact_gamma = 1.2;   // test-real perturbation magnitude
  double artifact_fraction = 0.5;       // fraction of test reals perturbed
  double fake_artifact_fraction = 0.5;  // fraction of fakes also carrying a
  double fake_artifact_jitter = 0.3;    // noise on the fake-side artifact
  std::uint64_t seed = 0;
};

SyntheticSpec default_spec();

struct Sample {
  Vector x;
  int label = 0;  // 0 real, 1 fake
};

enum class SplitTag { kTrain, kTestIid, kShiftedReal, kMisartifactReal };
const char* split_tag_name(SplitTag tag);

struct SyntheticDataset {
  std::size_t input_dim = 0;
  std::vector<Sample> train;
  std::vector<Sample> test_iid;          // same-distribution holdout
  std::vector<Sample> shifted_real;      // all label 0
  std::vector<Sample> misartifact_real;  // all label 0, clean real + gamma*a
  std::vector<Vector> misartifact_clean; // the unperturbed sources

  // Generation-time diagnostics backing the scenario premises.
  double real_within_mode_cov_trace = 0.0;  // mean over modes
  double fake_cov_trace = 0.0;
  double confound_projection = 0.0;  // <a, mean(fakes) - mean(reals)> on train
};

/// Deterministic in the spec seed; every split uses an independent derived
/// stream so changing one count does not reshuffle the others.
SyntheticDataset generate(const SyntheticSpec& spec);

/// One CSV for all splits: header x0,...,x{D-1},y,tag then train, test_iid,
/// shifted_real, misartifact_real rows with 17 significant digits, LF ends.
void write_dataset_csv(const SyntheticDataset& dataset, const std::string& path);
SyntheticDataset read_dataset_csv(const std::string& path);

/// Headerless numeric CSV for parameter tensors.
void write_matrix_csv(const Matrix& m, const std::string& path);
Matrix read_matrix_csv(const std::string& path);

}  // namespace realid

#endif  // REALID_DATA_HPP_
