#ifndef REALID_MODEL_HPP_
#define REALID_MODEL_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "realid/data.hpp"
#include "realid/losses.hpp"
#include "realid/memory.hpp"

namespace realid {

/// Fully connected rectifier network; the last layer is linear and its
/// output is the feature vector the rest of the pipeline consumes.
struct ExtractorParams {
  std::vector<std::size_t> widths;  // input, hidden..., feature dim
  std::vector<Matrix> weights;      // layer l: widths[l+1] x widths[l]
  std::vector<Vector> biases;
};

/// Weights i.i.d. normal scaled by 1/sqrt(fan_in), biases zero. Draw order
/// is row-major per layer, input to output.
ExtractorParams init_extractor(const std::vector<std::size_t>& widths, SeededRng& rng);

Vector extract(const ExtractorParams& params, const Vector& x);

/// Forward activations kept for backpropagation.
struct ExtractorTrace {
  std::vector<Vector> activations;  // a_0 = x, ..., a_L = feature
  std::vector<Vector> preacts;      // z_1, ..., z_L
};
Vector extract_traced(const ExtractorParams& params, const Vector& x, ExtractorTrace& trace);

/// Linear classifier head; 4 outputs for the independent dual-decision
/// head, 2 for the plain binary one.
struct HeadParams {
  Matrix weight;  // outputs x feature_dim
  Vector bias;
};
HeadParams init_head(std::size_t outputs, std::size_t feature_dim, SeededRng& rng);

Vector head_logits(const HeadParams& head, const Vector& feature);
Vector idc_forward(const HeadParams& head, const Vector& feature);  // softmax(W f + b)

enum class ScoreMode { kRaw, kRenormalized };

/// Fake score from head probabilities: index 1 as-is, or renormalized
/// against index 0 (0.5 when that mass vanishes).
double predict_score(const Vector& probs, ScoreMode mode);

struct TrainConfig {
  std::size_t input_dim = 2;
  std::vector<std::size_t> hidden = {32, 32};
  std::size_t feature_dim = 16;
  std::size_t prototype_count = 10;
  // Batch and epoch defaults are sized so the distinction term (unbounded
  // below on raw features) cannot push the optimizer into overflow at the
  // default learning rate, with margin across the CLI sweep grids.
  std::size_t batch_per_class = 64;
  std::size_t epochs = 12;
  double learning_rate = 0.05;
  double momentum = 0.9;
  LossWeights weights;
  std::uint64_t seed = 0;
  bool enable_realc2 = true;
  bool enable_idc = true;
  bool symmetric_fake_losses = false;
  // L2-normalize features before prototype correlation and bank updates
  // only; loss terms and the classifier consume the raw features.
  bool normalize_features = false;
  ScoreMode score_mode = ScoreMode::kRaw;
};

struct SgdState {
  std::vector<Matrix> extractor_w;
  std::vector<Vector> extractor_b;
  Matrix head_w;
  Vector head_b;
};

struct TrainState {
  TrainConfig config;
  ExtractorParams extractor;
  HeadParams head;
  MemoryBank real_bank;
  MemoryBank fake_bank;
  SgdState velocity;
  SeededRng shuffle_rng{0};
};

/// Builds model, banks and optimizer from the seed. Parameter, bank and
/// shuffle draws come from independent derived streams, so disabling one
/// part never shifts another's initialization.
TrainState init_train_state(const TrainConfig& config);

struct BatchGradients {
  std::vector<Matrix> extractor_w;
  std::vector<Vector> extractor_b;
  Matrix head_w;
  Vector head_b;
};

/// Pre-step memory tensors, reused for the prototype update that follows
/// the optimizer step.
struct MemorySnapshot {
  bool active = false;
  Matrix real_features;  // memory-path features (normalized when configured)
  Matrix fake_features;
  CorrelationTensors real_corr;
  CorrelationTensors fake_corr;
  AssignmentTable real_table;
  AssignmentTable fake_table;
};

/// Distances to the nearest non-smooth point of each piecewise element,
/// collected so finite-difference probes can reject kink-adjacent batches.
struct BatchDiagnostics {
  double min_abs_preact = 1e300;
  double min_diversity_margin_abs = 1e300;
  double min_diversity_norm = 1e300;
  double min_reg_gap_to_one = 1e300;
  double min_assignment_gap = 1e300;
};

/// Forward pass, losses and parameter gradients for one batch of
/// batch_per_class real rows then as many fake rows. Prototypes are held
/// constant; no state is mutated.
LossBundle compute_batch(const ExtractorParams& extractor, const HeadParams& head,
                         const MemoryBank* real_bank, const MemoryBank* fake_bank,
                         const TrainConfig& config, const Matrix& real_inputs,
                         const Matrix& fake_inputs, BatchGradients* grads,
                         MemorySnapshot* snapshot, BatchDiagnostics* diag);

/// One optimization step: losses and gradients against the frozen banks,
/// SGD-with-momentum parameter update, then the bank update driven by the
/// pre-step features of this same batch.
LossBundle train_step(TrainState& state, const Matrix& real_inputs, const Matrix& fake_inputs);

double model_score(const TrainState& state, const Vector& x);

struct EpochRecord {
  std::size_t epoch = 0;
  double ce = 0.0;
  double diversity = 0.0;
  double distinction = 0.0;
  double reg = 0.0;
  double total = 0.0;
  double train_accuracy = 0.0;
  double test_iid_auc = 0.0;  // NaN when the split lacks a class
};

struct TrainResult {
  TrainState state;
  std::vector<EpochRecord> history;
};

/// Seeded-shuffle epoch loop over the train split; drops ragged tails.
/// History has exactly one record per epoch.
TrainResult train(const TrainConfig& config, const SyntheticDataset& dataset);

void write_history_csv(const std::vector<EpochRecord>& history, const std::string& path);

/// One CSV per parameter tensor plus a manifest; loading reproduces
/// predictions exactly (values are written with 17 significant digits).
void save_checkpoint(const TrainState& state, const std::string& dir);
TrainState load_checkpoint(const std::string& manifest_path);

}  // namespace realid

#endif  // REALID_MODEL_HPP_
