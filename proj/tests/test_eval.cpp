#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "realid/csv.hpp"
#include "realid/data.hpp"
#include "realid/eval.hpp"
#include "realid/model.hpp"

using namespace realid;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* name) {
  fs::path dir = fs::temp_directory_path() / "realid_test_eval" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// O(n^2) pairwise oracle: wins plus half-credit ties over all fake/real pairs.
double auc_oracle(const Vector& scores, const std::vector<int>& labels) {
  double credit = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) credit += 1.0;
      else if (scores[i] == scores[j]) credit += 0.5;
    }
  }
  return credit / static_cast<double>(pairs);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

TEST_CASE("auc hits the exact anchors") {
  CHECK(auc({0.1, 0.9}, {0, 1}) == 1.0);
  CHECK(auc({0.9, 0.1}, {0, 1}) == 0.0);
  CHECK(auc({0.5, 0.5}, {0, 1}) == 0.5);
}

TEST_CASE("auc scores a small hand case") {
  // fake/real pairs: 0.35 beats 0.1 only; 0.8 beats both
  CHECK(auc({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}) == doctest::Approx(0.75).epsilon(1e-15));
  // one tied pair at half credit
  CHECK(auc({0.5, 0.5, 0.7}, {0, 1, 1}) == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("auc agrees with the pairwise oracle on random instances with ties") {
  SeededRng rng(29);
  for (int trial = 0; trial < 500; ++trial) {
    std::size_t n = 2 + rng.uniform_index(40);
    Vector scores(n);
    std::vector<int> labels(n);
    bool has_real = false, has_fake = false;
    for (std::size_t i = 0; i < n; ++i) {
      // coarse grid forces plenty of exact ties
      scores[i] = static_cast<double>(rng.uniform_index(8)) / 8.0;
      labels[i] = rng.uniform() < 0.5 ? 0 : 1;
      (labels[i] == 0 ? has_real : has_fake) = true;
    }
    if (!has_real) labels[0] = 0;
    if (!has_fake) labels[n - 1] = 1;
    CHECK(std::abs(auc(scores, labels) - auc_oracle(scores, labels)) < 1e-12);
  }
}

TEST_CASE("auc is invariant under strictly monotone score transforms") {
  SeededRng rng(31);
  Vector scores(60);
  std::vector<int> labels(60);
  for (std::size_t i = 0; i < 60; ++i) {
    scores[i] = rng.gaussian();
    labels[i] = i % 2;
  }
  double base = auc(scores, labels);

  Vector cubed(60), squashed(60);
  for (std::size_t i = 0; i < 60; ++i) {
    cubed[i] = scores[i] * scores[i] * scores[i];
    squashed[i] = 1.0 / (1.0 + std::exp(-scores[i]));
  }
  CHECK(auc(cubed, labels) == doctest::Approx(base).epsilon(1e-12));
  CHECK(auc(squashed, labels) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("negating tie-free scores complements the auc") {
  SeededRng rng(37);
  Vector scores(50);
  std::vector<int> labels(50);
  for (std::size_t i = 0; i < 50; ++i) {
    scores[i] = rng.gaussian();
    labels[i] = i < 20 ? 0 : 1;
  }
  Vector negated(50);
  for (std::size_t i = 0; i < 50; ++i) negated[i] = -scores[i];
  CHECK(auc(negated, labels) ==
        doctest::Approx(1.0 - auc(scores, labels)).epsilon(1e-12));
}

TEST_CASE("auc rejects degenerate inputs") {
  CHECK_THROWS_AS(auc({0.5, 0.6}, {0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(auc({0.5, 0.6}, {1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(auc({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(auc({0.5}, {0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(auc({0.5, 0.4}, {0, 2}), std::invalid_argument);
  CHECK_THROWS_AS(auc({std::nan(""), 0.4}, {0, 1}), std::invalid_argument);
}

TEST_CASE("classification counts respect the strict threshold") {
  ClassificationCounts perfect = classify_and_count({0.1, 0.9}, {0, 1}, 0.5);
  CHECK(perfect.true_real == 1);
  CHECK(perfect.true_fake == 1);
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.fpr_real == 0.0);

  // a score exactly at the threshold stays real
  ClassificationCounts boundary = classify_and_count({0.5}, {0}, 0.5);
  CHECK(boundary.true_real == 1);
  CHECK(boundary.false_fake == 0);

  ClassificationCounts all_wrong = classify_and_count({0.9, 0.9}, {0, 0}, 0.5);
  CHECK(all_wrong.false_fake == 2);
  CHECK(all_wrong.fpr_real == 1.0);
  CHECK(all_wrong.accuracy == 0.0);

  ClassificationCounts no_reals = classify_and_count({0.9, 0.2}, {1, 1}, 0.5);
  CHECK(std::isnan(no_reals.fpr_real));
  CHECK(no_reals.accuracy == 0.5);
}

TEST_CASE("metrics JSON round-trips and is byte-deterministic") {
  MetricsReport report;
  report.auc = 0.875;
  report.accuracy = 0.8;
  report.fpr_real = 0.0625;
  report.threshold = 0.5;
  report.test_iid = {0.9, 0.85, 0.05, 600};
  report.shifted_real = {std::nullopt, 0.7, 0.3, 100};
  report.misartifact_real = {std::nullopt, 0.6, 0.4, 150};

  std::string text = metrics_to_json(report);
  CHECK(text == metrics_to_json(report));
  CHECK(text.find("\"splits.test_iid.auc\"") != std::string::npos);
  CHECK(text.back() == '\n');

  MetricsReport back = metrics_from_json_text(text);
  CHECK(back.auc == report.auc);
  CHECK(back.accuracy == report.accuracy);
  CHECK(back.fpr_real == report.fpr_real);
  CHECK(back.threshold == report.threshold);
  REQUIRE(back.test_iid.auc.has_value());
  CHECK(*back.test_iid.auc == 0.9);
  CHECK_FALSE(back.shifted_real.auc.has_value());
  CHECK(back.shifted_real.count == 100);
  CHECK(back.misartifact_real.fpr_real == 0.4);
}

TEST_CASE("evaluate_model pools every test split") {
  SyntheticDataset dataset = generate(default_spec());
  TrainConfig cfg;
  cfg.hidden = {8};
  cfg.feature_dim = 4;
  cfg.prototype_count = 3;
  cfg.batch_per_class = 32;
  cfg.epochs = 2;
  TrainResult result = train(cfg, dataset);

  MetricsReport report = evaluate_model(result.state, dataset, 0.5);
  CHECK(report.threshold == 0.5);
  CHECK(report.test_iid.count == 600);
  CHECK(report.shifted_real.count == 100);
  CHECK(report.misartifact_real.count == 150);
  REQUIRE(report.test_iid.auc.has_value());
  CHECK(std::isfinite(*report.test_iid.auc));
  // the stress splits are all-real: no within-split auc, fpr carries the signal
  CHECK_FALSE(report.shifted_real.auc.has_value());
  CHECK_FALSE(report.misartifact_real.auc.has_value());
  CHECK(std::isfinite(report.auc));
  CHECK(report.auc >= 0.0);
  CHECK(report.auc <= 1.0);
  CHECK(report.fpr_real >= 0.0);
  CHECK(report.fpr_real <= 1.0);

  // combined accuracy pools 850 samples; cross-check against the splits
  double pooled = (report.test_iid.accuracy * 600.0 + report.shifted_real.accuracy * 100.0 +
                   report.misartifact_real.accuracy * 150.0) /
                  850.0;
  CHECK(report.accuracy == doctest::Approx(pooled).epsilon(1e-12));
}

TEST_CASE("embedding export is complete, stable, and consistent with the model") {
  SyntheticDataset dataset = generate(default_spec());
  TrainConfig cfg;
  cfg.hidden = {8};
  cfg.feature_dim = 4;
  cfg.prototype_count = 3;
  cfg.batch_per_class = 32;
  cfg.epochs = 1;
  TrainResult result = train(cfg, dataset);

  fs::path dir = temp_dir("embeddings");
  fs::path path = dir / "embeddings.csv";
  export_embeddings(result.state, dataset, path.string());

  std::vector<std::string> lines = read_text_lines(path.string());
  REQUIRE(lines.size() == 1 + 600 + 600 + 100 + 150);
  CHECK(lines[0] == "f0,f1,f2,f3,y,tag,score");

  // re-export must be byte-identical
  fs::path again = dir / "embeddings2.csv";
  export_embeddings(result.state, dataset, again.string());
  CHECK(read_file(path) == read_file(again));

  // spot-check scores against a fresh forward pass (train rows come first)
  for (std::size_t i = 1; i < lines.size(); i += 200) {
    std::vector<std::string> fields = split_csv_line(lines[i]);
    REQUIRE(fields.size() == 7);
    const Sample* s = nullptr;
    std::size_t row = i - 1;
    if (row < 600) s = &dataset.train[row];
    else if (row < 1200) s = &dataset.test_iid[row - 600];
    else if (row < 1300) s = &dataset.shifted_real[row - 1200];
    else s = &dataset.misartifact_real[row - 1300];
    double score = parse_double_field(fields[6], i + 1, "embeddings.csv");
    CHECK(std::abs(score - model_score(result.state, s->x)) <= 1e-15);
    CHECK(fields[4] == (s->label == 0 ? "0" : "1"));
  }
}
