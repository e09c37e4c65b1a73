#ifndef REALID_EVAL_HPP_
#define REALID_EVAL_HPP_

#include <optional>
#include <string>
#include <vector>

#include "realid/numerics.hpp"

namespace realid {

struct TrainState;
struct SyntheticDataset;

/// Probability a random fake outranks a random real, ties at half credit
/// (Mann-Whitney via average ranks, O(n log n)). Labels are 0 real, 1
/// fake; throws unless both classes are present.
double auc(const Vector& scores, const std::vector<int>& labels);

struct ClassificationCounts {
  std::size_t true_fake = 0;   // fake scored fake
  std::size_t false_fake = 0;  // real scored fake
  std::size_t true_real = 0;   // real scored real
  std::size_t false_real = 0;  // fake scored real
  double accuracy = 0.0;
  double fpr_real = 0.0;  // fraction of true reals scored fake; NaN without reals
};

/// Predicted fake iff score is strictly greater than the threshold.
ClassificationCounts classify_and_count(const Vector& scores, const std::vector<int>& labels,
                                        double threshold);

struct SplitMetrics {
  std::optional<double> auc;  // absent when the split holds one class
  double accuracy = 0.0;
  double fpr_real = 0.0;
  std::size_t count = 0;
};

/// Combined metrics pool every test split; shifted_real and
/// misartifact_real are all-real by construction, so their own AUC is
/// absent and fpr_real carries the signal.
struct MetricsReport {
  double auc = 0.0;
  double accuracy = 0.0;
  double fpr_real = 0.0;
  double threshold = 0.5;
  SplitMetrics test_iid;
  SplitMetrics shifted_real;
  SplitMetrics misartifact_real;
};

/// Flat JSON document with fixed dotted keys, byte-deterministic.
std::string metrics_to_json(const MetricsReport& report);
MetricsReport metrics_from_json_text(const std::string& text);

MetricsReport evaluate_model(const TrainState& state, const SyntheticDataset& dataset,
                             double threshold);

/// CSV of feature vectors with label, split tag and fake score per row.
void export_embeddings(const TrainState& state, const SyntheticDataset& dataset,
                       const std::string& path);

}  // namespace realid

#endif  // REALID_EVAL_HPP_
