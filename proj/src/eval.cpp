#include "realid/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "realid/csv.hpp"
#include "realid/data.hpp"
#include "realid/model.hpp"

namespace realid {

double auc(const Vector& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("auc: size mismatch");
  if (scores.empty()) throw std::invalid_argument("auc: empty input");
  if (!all_finite(scores)) throw std::invalid_argument("auc: non-finite score");
  std::size_t n_fake = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw std::invalid_argument("auc: labels must be 0 or 1");
    n_fake += static_cast<std::size_t>(y);
  }
  const std::size_t n = scores.size();
  const std::size_t n_real = n - n_fake;
  if (n_fake == 0 || n_real == 0) throw std::invalid_argument("auc: needs both classes");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Average ranks per tied group; Mann-Whitney U from the fake rank sum.
  double fake_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) fake_rank_sum += avg_rank;
    }
    i = j;
  }
  double u = fake_rank_sum - 0.5 * static_cast<double>(n_fake) * static_cast<double>(n_fake + 1);
  return u / (static_cast<double>(n_fake) * static_cast<double>(n_real));
}

ClassificationCounts classify_and_count(const Vector& scores, const std::vector<int>& labels,
                                        double threshold) {
  if (scores.size() != labels.size()) throw std::invalid_argument("classify_and_count: size mismatch");
  if (scores.empty()) throw std::invalid_argument("classify_and_count: empty input");
  ClassificationCounts counts;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    bool predicted_fake = scores[i] > threshold;
    if (labels[i] == 1) {
      (predicted_fake ? counts.true_fake : counts.false_real) += 1;
    } else {
      (predicted_fake ? counts.false_fake : counts.true_real) += 1;
    }
  }
  counts.accuracy = static_cast<double>(counts.true_fake + counts.true_real) /
                    static_cast<double>(scores.size());
  std::size_t reals = counts.false_fake + counts.true_real;
  counts.fpr_real = reals > 0
                        ? static_cast<double>(counts.false_fake) / static_cast<double>(reals)
                        : std::nan("");
  return counts;
}

namespace {

void score_split(const TrainState& state, const std::vector<Sample>& samples, Vector& scores,
                 std::vector<int>& labels) {
  for (const Sample& s : samples) {
    scores.push_back(model_score(state, s.x));
    labels.push_back(s.label);
  }
}

SplitMetrics split_metrics(const Vector& scores, const std::vector<int>& labels,
                           double threshold) {
  SplitMetrics m;
  m.count = scores.size();
  if (scores.empty()) return m;
  ClassificationCounts counts = classify_and_count(scores, labels, threshold);
  m.accuracy = counts.accuracy;
  m.fpr_real = counts.fpr_real;
  bool has_real = counts.false_fake + counts.true_real > 0;
  bool has_fake = counts.true_fake + counts.false_real > 0;
  if (has_real && has_fake) m.auc = auc(scores, labels);
  return m;
}

void emit_split(nlohmann::json& j, const char* name, const SplitMetrics& m) {
  std::string prefix = std::string("splits.") + name + ".";
  j[prefix + "auc"] = m.auc ? nlohmann::json(*m.auc) : nlohmann::json(nullptr);
  j[prefix + "accuracy"] = m.accuracy;
  j[prefix + "fpr_real"] = m.fpr_real;
  j[prefix + "count"] = m.count;
}

SplitMetrics parse_split(const nlohmann::json& j, const char* name) {
  SplitMetrics m;
  std::string prefix = std::string("splits.") + name + ".";
  const auto& auc_field = j.at(prefix + "auc");
  if (!auc_field.is_null()) m.auc = auc_field.get<double>();
  m.accuracy = j.at(prefix + "accuracy").get<double>();
  m.fpr_real = j.at(prefix + "fpr_real").get<double>();
  m.count = j.at(prefix + "count").get<std::size_t>();
  return m;
}

}  // namespace

std::string metrics_to_json(const MetricsReport& report) {
  nlohmann::json j;
  j["auc"] = report.auc;
  j["accuracy"] = report.accuracy;
  j["fpr_real"] = report.fpr_real;
  j["threshold"] = report.threshold;
  emit_split(j, "test_iid", report.test_iid);
  emit_split(j, "shifted_real", report.shifted_real);
  emit_split(j, "misartifact_real", report.misartifact_real);
  return j.dump(2) + "\n";
}

MetricsReport metrics_from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  MetricsReport report;
  report.auc = j.at("auc").get<double>();
  report.accuracy = j.at("accuracy").get<double>();
  report.fpr_real = j.at("fpr_real").get<double>();
  report.threshold = j.at("threshold").get<double>();
  report.test_iid = parse_split(j, "test_iid");
  report.shifted_real = parse_split(j, "shifted_real");
  report.misartifact_real = parse_split(j, "misartifact_real");
  return report;
}

MetricsReport evaluate_model(const TrainState& state, const SyntheticDataset& dataset,
                             double threshold) {
  Vector iid_scores;
  std::vector<int> iid_labels;
  score_split(state, dataset.test_iid, iid_scores, iid_labels);
  Vector shifted_scores;
  std::vector<int> shifted_labels;
  score_split(state, dataset.shifted_real, shifted_scores, shifted_labels);
  Vector mis_scores;
  std::vector<int> mis_labels;
  score_split(state, dataset.misartifact_real, mis_scores, mis_labels);

  Vector all_scores = iid_scores;
  std::vector<int> all_labels = iid_labels;
  all_scores.insert(all_scores.end(), shifted_scores.begin(), shifted_scores.end());
  all_labels.insert(all_labels.end(), shifted_labels.begin(), shifted_labels.end());
  all_scores.insert(all_scores.end(), mis_scores.begin(), mis_scores.end());
  all_labels.insert(all_labels.end(), mis_labels.begin(), mis_labels.end());
  if (all_scores.empty()) throw std::invalid_argument("evaluate_model: no test samples");

  MetricsReport report;
  report.threshold = threshold;
  ClassificationCounts combined = classify_and_count(all_scores, all_labels, threshold);
  report.accuracy = combined.accuracy;
  report.fpr_real = combined.fpr_real;
  bool has_real = combined.false_fake + combined.true_real > 0;
  bool has_fake = combined.true_fake + combined.false_real > 0;
  report.auc = has_real && has_fake ? auc(all_scores, all_labels) : std::nan("");
  report.test_iid = split_metrics(iid_scores, iid_labels, threshold);
  report.shifted_real = split_metrics(shifted_scores, shifted_labels, threshold);
  report.misartifact_real = split_metrics(mis_scores, mis_labels, threshold);
  return report;
}

void export_embeddings(const TrainState& state, const SyntheticDataset& dataset,
                       const std::string& path) {
  FileWriter out(path);
  const std::size_t c = state.config.feature_dim;
  for (std::size_t i = 0; i < c; ++i) std::fprintf(out.get(), "f%zu,", i);
  std::fprintf(out.get(), "y,tag,score\n");

  auto write_split = [&](const std::vector<Sample>& samples, SplitTag tag) {
    for (const Sample& s : samples) {
      Vector f = extract(state.extractor, s.x);
      for (double v : f) std::fprintf(out.get(), "%s,", format_g17(v).c_str());
      double score = predict_score(idc_forward(state.head, f), state.config.score_mode);
      std::fprintf(out.get(), "%d,%s,%s\n", s.label, split_tag_name(tag),
                   format_g17(score).c_str());
    }
  };
  write_split(dataset.train, SplitTag::kTrain);
  write_split(dataset.test_iid, SplitTag::kTestIid);
  write_split(dataset.shifted_real, SplitTag::kShiftedReal);
  write_split(dataset.misartifact_real, SplitTag::kMisartifactReal);
}

}  // namespace realid
