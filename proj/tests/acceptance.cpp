// Acceptance harness: drives the library and the CLI binary (argv[1])
// through nine end-to-end checks and prints one PASS/FAIL line per
// criterion. Exit code 0 only when every criterion passes. Tolerances are
// pinned here, next to each check.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "realid/data.hpp"
#include "realid/eval.hpp"
#include "realid/experiments.hpp"
#include "realid/gradcheck.hpp"
#include "realid/losses.hpp"
#include "realid/memory.hpp"
#include "realid/model.hpp"
#include "reference_baseline.hpp"

using namespace realid;
namespace fs = std::filesystem;

namespace {

std::string g_cli;
fs::path g_work;

double seconds_since(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::size_t worker_jobs() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 2;
  return std::min<std::size_t>(hw, 8);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

int run_cli(const std::string& args) {
  static int counter = 0;
  fs::path log = g_work / ("c9_cmd_" + std::to_string(counter++) + ".log");
  std::string cmd = "'" + g_cli + "' " + args + " > '" + log.string() + "' 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

double mean(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

// ---------------------------------------------------------------- criterion 1

bool criterion_gradients(std::string& summary) {
  auto start = std::chrono::steady_clock::now();
  std::vector<GradSuiteResult> results = run_gradcheck(0, 120, false);
  double elapsed = seconds_since(start);

  bool pass = results.size() == 7 && gradcheck_passed(results);
  double worst = 0.0;
  for (const GradSuiteResult& r : results) {
    pass = pass && r.pass && r.configs >= 100 && r.max_rel_err < 1e-5;
    worst = std::max(worst, r.max_rel_err);
  }
  pass = pass && elapsed < 60.0;

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%zu gradient suites, 120 configs each, max rel err %.2e "
                "(tolerance 1e-5, step 1e-5), %.1fs",
                results.size(), worst, elapsed);
  summary = buf;
  return pass;
}

// ---------------------------------------------------------------- criterion 2

bool criterion_memory(std::string& summary) {
  // part A: 1,000 randomized bank updates with invariants checked every time
  SeededRng feature_rng(1001);
  SeededRng init_rng(1002);
  MemoryBank bank = init_bank(6, 12, ClassRole::kReal, init_rng);
  std::size_t update_rounds = 0;
  bool norms_ok = true;
  bool partition_ok = true;
  for (int round = 0; round < 1000; ++round) {
    std::size_t n = 1 + feature_rng.uniform_index(24);
    double scale = 0.1 + 5.0 * feature_rng.uniform();
    Matrix feats(n, 12);
    for (double& x : feats.data) x = scale * feature_rng.gaussian();
    CorrelationTensors corr = correlate(bank, feats);
    AssignmentTable table = assign(corr);

    std::vector<std::size_t> hit(n, 0);
    for (std::size_t k = 0; k < table.update_sets.size(); ++k) {
      if (!std::is_sorted(table.update_sets[k].begin(), table.update_sets[k].end()))
        partition_ok = false;
      for (std::size_t j : table.update_sets[k]) {
        if (table.nearest[j] != k) partition_ok = false;
        hit[j] += 1;
      }
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (hit[j] != 1) partition_ok = false;
    }

    update_bank(bank, feats, corr, table);
    for (const Vector& m : bank.prototypes) {
      if (std::abs(norm2(m) - 1.0) > 1e-9) norms_ok = false;
    }
    ++update_rounds;
  }

  // part B: 1,000 random assignment instances against a brute-force oracle,
  // with duplicated prototypes and features forcing exact ties
  SeededRng case_rng(2001);
  std::size_t assign_cases = 0;
  bool assign_ok = true;
  for (int instance = 0; instance < 1000; ++instance) {
    std::size_t k = 2 + case_rng.uniform_index(7);
    std::size_t c = 1 + case_rng.uniform_index(6);
    std::size_t n = 1 + case_rng.uniform_index(32);
    SeededRng bank_rng(3000 + static_cast<std::uint64_t>(instance));
    MemoryBank b = init_bank(k, c, ClassRole::kFake, bank_rng);
    if (case_rng.uniform() < 0.5 && k >= 3) {
      b.prototypes[1 + case_rng.uniform_index(k - 1)] = b.prototypes[0];
    }
    Matrix feats(n, c);
    for (double& x : feats.data) x = 3.0 * case_rng.gaussian();
    if (case_rng.uniform() < 0.3 && n >= 2) {
      std::size_t src = case_rng.uniform_index(n);
      std::size_t dst = case_rng.uniform_index(n);
      for (std::size_t cc = 0; cc < c; ++cc) feats(dst, cc) = feats(src, cc);
    }

    CorrelationTensors corr = correlate(b, feats);
    AssignmentTable table = assign(corr);
    for (std::size_t j = 0; j < n; ++j) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < k; ++i) {
        if (corr.w(i, j) > corr.w(best, j)) best = i;
      }
      std::size_t second = best == 0 ? 1 : 0;
      for (std::size_t i = 0; i < k; ++i) {
        if (i != best && corr.w(i, j) > corr.w(second, j)) second = i;
      }
      if (table.nearest[j] != best || table.second_nearest[j] != second) assign_ok = false;
    }
    ++assign_cases;
  }

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%zu bank updates (unit norms within 1e-9, update sets always a "
                "partition), %zu assignment instances equal to the brute-force oracle",
                update_rounds, assign_cases);
  summary = buf;
  return norms_ok && partition_ok && assign_ok;
}

// ---------------------------------------------------------------- criterion 3

bool criterion_regularizer(std::string& summary) {
  bool pass = true;

  // worked example, quadratic branch
  double worked = idc_regularizer({0.7, 0.1, 0.05, 0.15}, 0, 0.5).value;
  pass = pass && std::abs(worked - 0.00125) <= 1e-12;

  // another quadratic anchor: gap 0.3 -> 0.5 * 0.09
  double quad_anchor = idc_regularizer({0.5, 0.35, 0.1, 0.05}, 0, 0.5).value;
  pass = pass && std::abs(quad_anchor - 0.045) <= 1e-12;

  // |gap| = 1 sits on the linear branch at both ends and for both labels
  double lin_pos = idc_regularizer({0.0, 1.0, 0.0, 0.0}, 0, 0.5).value;
  double lin_neg = idc_regularizer({0.0, 0.0, 0.0, 1.0}, 0, 0.5).value;
  double lin_fake = idc_regularizer({1.0, 0.0, 0.0, 0.0}, 1, 0.5).value;
  pass = pass && std::abs(lin_pos - 0.5) <= 1e-15 && std::abs(lin_neg - 0.5) <= 1e-15 &&
         std::abs(lin_fake - 0.5) <= 1e-15;

  // beta = 1/2 joins the branches continuously
  double inside = idc_regularizer({0.0, 1.0 - 1e-9, 0.0, 1e-9}, 0, 0.5).value;
  double gap = std::abs(inside - lin_pos);
  pass = pass && gap <= 1e-8;

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "worked value %.5f (expected 0.00125), both branches hit 0.5 at |gap|=1 "
                "with beta=0.5, continuity gap %.1e",
                worked, gap);
  summary = buf;
  return pass;
}

// ---------------------------------------------------------------- criterion 4

bool criterion_baseline_equivalence(std::string& summary) {
  SyntheticDataset dataset = generate(default_spec());

  TrainConfig cfg;  // default architecture, both modules off
  cfg.seed = 0;
  cfg.batch_per_class = 64;
  cfg.epochs = 50;  // 4 steps per epoch -> exactly 200 optimizer steps
  cfg.enable_realc2 = false;
  cfg.enable_idc = false;
  TrainResult result = train(cfg, dataset);

  refbase::RefConfig ref_cfg;
  ref_cfg.seed = 0;
  ref_cfg.batch_per_class = 64;
  ref_cfg.epochs = 50;
  std::vector<std::vector<double>> xs;
  std::vector<int> labels;
  for (const Sample& s : dataset.train) {
    xs.push_back(s.x);
    labels.push_back(s.label);
  }
  refbase::RefModel ref = refbase::ref_train(ref_cfg, xs, labels);

  bool params_equal = result.state.head.weight.data == ref.head_w.data &&
                      result.state.head.bias == ref.head_b;
  for (std::size_t l = 0; l < ref.weights.size(); ++l) {
    params_equal = params_equal &&
                   result.state.extractor.weights[l].data == ref.weights[l].data &&
                   result.state.extractor.biases[l] == ref.biases[l];
  }

  std::size_t compared = 0;
  std::size_t equal = 0;
  auto compare_split = [&](const std::vector<Sample>& split) {
    for (const Sample& s : split) {
      ++compared;
      if (model_score(result.state, s.x) == refbase::ref_score(ref, s.x)) ++equal;
    }
  };
  compare_split(dataset.test_iid);
  compare_split(dataset.shifted_real);
  compare_split(dataset.misartifact_real);

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "modules off vs independent two-logit trainer: %zu/%zu predictions "
                "bitwise equal after 200 steps, parameters %s",
                equal, compared, params_equal ? "identical" : "DIFFER");
  summary = buf;
  return params_equal && compared == 850 && equal == compared;
}

// ---------------------------------------------------------------- criterion 5

bool criterion_auc(std::string& summary) {
  auto oracle = [](const Vector& scores, const std::vector<int>& labels) {
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
  };

  bool anchors = auc({0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}) == 1.0 &&
                 auc({0.9, 0.8, 0.2, 0.1}, {0, 0, 1, 1}) == 0.0 &&
                 auc({0.5, 0.5, 0.5, 0.5}, {0, 0, 1, 1}) == 0.5;

  SeededRng rng(4001);
  std::size_t cases = 0;
  double worst = 0.0;
  for (int instance = 0; instance < 1000; ++instance) {
    std::size_t n = 2 + rng.uniform_index(199);
    Vector scores(n);
    std::vector<int> labels(n);
    bool grid = rng.uniform() < 0.5;  // grid scores force ties
    bool has_real = false, has_fake = false;
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = grid ? static_cast<double>(rng.uniform_index(10)) / 10.0 : rng.gaussian();
      labels[i] = rng.uniform() < 0.5 ? 0 : 1;
      (labels[i] == 0 ? has_real : has_fake) = true;
    }
    if (!has_real) labels[0] = 0;
    if (!has_fake) labels[n - 1] = 1;
    worst = std::max(worst, std::abs(auc(scores, labels) - oracle(scores, labels)));
    ++cases;
  }

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "rank-based auc vs O(n^2) oracle on %zu instances with ties: max gap %.2e "
                "(tolerance 1e-12); perfect/antiperfect/tied anchors exact",
                cases, worst);
  summary = buf;
  return anchors && worst < 1e-12;
}

// ------------------------------------------------------- criteria 6 and 7

// Shared stress protocol: the stock scenario, longer schedule at a cooler
// learning rate so every variant trains stably, 5 seeds per variant.
struct ProtocolRuns {
  std::vector<std::vector<MetricsReport>> metrics;  // [variant][seed]
  double baseline_seconds = 0.0;
  double total_seconds = 0.0;
};

TrainConfig protocol_config() {
  TrainConfig cfg;
  cfg.batch_per_class = 100;
  cfg.epochs = 200;
  cfg.learning_rate = 0.01;
  return cfg;
}

ProtocolRuns run_protocol(const SyntheticDataset& dataset) {
  const std::vector<VariantSpec> variants = ablation_variants();
  const std::size_t seeds = 5;
  ProtocolRuns runs;
  runs.metrics.assign(variants.size(), std::vector<MetricsReport>(seeds));

  auto start = std::chrono::steady_clock::now();
  // baseline first so its share of the budget can be reported separately
  parallel_for_index(seeds, worker_jobs(), [&](std::size_t i) {
    TrainConfig cfg = make_variant_config(protocol_config(), variants[0], 1 + i);
    runs.metrics[0][i] = run_single(cfg, dataset, 0.5);
  });
  runs.baseline_seconds = seconds_since(start);

  parallel_for_index(seeds * (variants.size() - 1), worker_jobs(), [&](std::size_t flat) {
    std::size_t v = 1 + flat / seeds;
    std::size_t i = flat % seeds;
    TrainConfig cfg = make_variant_config(protocol_config(), variants[v], 1 + i);
    runs.metrics[v][i] = run_single(cfg, dataset, 0.5);
  });
  runs.total_seconds = seconds_since(start);
  return runs;
}

double stress_fpr(const MetricsReport& m) {
  double n_s = static_cast<double>(m.shifted_real.count);
  double n_m = static_cast<double>(m.misartifact_real.count);
  return (m.shifted_real.fpr_real * n_s + m.misartifact_real.fpr_real * n_m) / (n_s + n_m);
}

bool criterion_failure_mode(const ProtocolRuns& runs, std::string& summary) {
  std::vector<double> iid, shifted, mis;
  for (const MetricsReport& m : runs.metrics[0]) {
    iid.push_back(m.test_iid.fpr_real);
    shifted.push_back(m.shifted_real.fpr_real);
    mis.push_back(m.misartifact_real.fpr_real);
  }
  bool pass = mean(shifted) > mean(iid) && mean(mis) > mean(iid) &&
              runs.baseline_seconds < 300.0;

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "baseline real-as-fake rate, 5-seed mean: iid %.3f vs shifted %.3f / "
                "misartifact %.3f (%.0fs)",
                mean(iid), mean(shifted), mean(mis), runs.baseline_seconds);
  summary = buf;
  return pass;
}

bool criterion_modules_help(const ProtocolRuns& runs, std::string& summary) {
  std::vector<double> base_auc, realc2_auc, idc_auc, full_auc;
  std::vector<double> base_stress, full_stress;
  for (std::size_t i = 0; i < 5; ++i) {
    base_auc.push_back(runs.metrics[0][i].auc);
    realc2_auc.push_back(runs.metrics[1][i].auc);
    idc_auc.push_back(runs.metrics[2][i].auc);
    full_auc.push_back(runs.metrics[3][i].auc);
    base_stress.push_back(stress_fpr(runs.metrics[0][i]));
    full_stress.push_back(stress_fpr(runs.metrics[3][i]));
  }

  bool pass = mean(full_stress) < mean(base_stress) && mean(full_auc) > mean(base_auc) &&
              mean(realc2_auc) > mean(base_auc) && mean(idc_auc) > mean(base_auc) &&
              runs.total_seconds < 1800.0;

  char buf[320];
  std::snprintf(buf, sizeof(buf),
                "5-seed means: stress fpr %.3f -> %.3f (full); combined auc base %.4f, "
                "memory-only %.4f, dual-head-only %.4f, full %.4f (%.0fs all variants)",
                mean(base_stress), mean(full_stress), mean(base_auc), mean(realc2_auc),
                mean(idc_auc), mean(full_auc), runs.total_seconds);
  summary = buf;
  return pass;
}

// ---------------------------------------------------------------- criterion 8

bool criterion_sweeps(std::string& summary) {
  SyntheticDataset dataset = generate(default_spec());
  TrainConfig base;  // library defaults

  bool pass = true;
  double worst_endpoint_gap = 0.0;
  std::size_t rows_total = 0;
  for (const std::string& param : {std::string("lambda1"), std::string("lambda2"),
                                   std::string("lambda3")}) {
    SweepOptions options;
    options.param = param;
    options.seeds = 3;
    options.seed_base = 1;
    options.jobs = worker_jobs();
    options.threshold = 0.5;
    options.out_dir = (g_work / ("sweep_" + param)).string();
    std::vector<SweepRow> rows = run_sweep(base, dataset, options);
    write_sweep_csv(param, rows, options.out_dir + "/sweep_" + param + ".csv");

    pass = pass && rows.size() == 9;
    for (const SweepRow& row : rows) {
      pass = pass && std::isfinite(row.mean_auc) && std::isfinite(row.mean_fpr_real);
    }
    rows_total += rows.size();

    // the zero endpoint must reproduce a directly configured ablated run
    std::vector<double> direct;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      TrainConfig ablated = base;
      ablated.enable_realc2 = true;
      ablated.enable_idc = true;
      ablated.weights.lambda1 = param == "lambda1" ? 0.0 : 0.5;
      ablated.weights.lambda2 = param == "lambda2" ? 0.0 : 0.5;
      ablated.weights.lambda3 = param == "lambda3" ? 0.0 : 0.5;
      ablated.seed = seed;
      direct.push_back(run_single(ablated, dataset, 0.5).auc);
    }
    double gap = std::abs(rows.front().value) > 0.0
                     ? 1.0  // grid must start at zero
                     : std::abs(rows.front().mean_auc - mean(direct));
    worst_endpoint_gap = std::max(worst_endpoint_gap, gap);
    pass = pass && gap <= 0.02;
  }

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "three lambda sweeps, %zu grid rows, all means finite; zero endpoints "
                "match direct ablated runs within %.2e (tolerance 0.02)",
                rows_total, worst_endpoint_gap);
  summary = buf;
  return pass;
}

// ---------------------------------------------------------------- criterion 9

bool criterion_cli_determinism(std::string& summary) {
  fs::path r1 = g_work / "c9_r1";
  fs::path r2 = g_work / "c9_r2";
  const std::string args = " --seed 5 --epochs 3 --batch 32";
  bool ok1 = run_cli("train -o '" + r1.string() + "'" + args) == 0;
  bool ok2 = run_cli("train -o '" + r2.string() + "'" + args) == 0;
  std::string m1 = read_file(r1 / "metrics.json");
  std::string m2 = read_file(r2 / "metrics.json");
  bool pass = ok1 && ok2 && !m1.empty() && m1 == m2;

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "two identical train invocations: metrics.json %s (%zu bytes)",
                pass ? "byte-identical" : "DIFFER", m1.size());
  summary = buf;
  return pass;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::printf("usage: acceptance <path-to-cli-binary>\n");
    return 2;
  }
  g_cli = argv[1];
  g_work = fs::temp_directory_path() / "realid_acceptance";
  fs::remove_all(g_work);
  fs::create_directories(g_work);

  int failures = 0;
  auto report = [&](int number, const char* label, bool pass, const std::string& summary) {
    std::printf("%s criterion %d (%s): %s\n", pass ? "PASS" : "FAIL", number, label,
                summary.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
  };

  std::string summary;
  bool pass;

  pass = criterion_gradients(summary);
  report(1, "analytical gradients", pass, summary);

  pass = criterion_memory(summary);
  report(2, "prototype memory invariants", pass, summary);

  pass = criterion_regularizer(summary);
  report(3, "decision regularizer anchors", pass, summary);

  pass = criterion_baseline_equivalence(summary);
  report(4, "baseline equivalence", pass, summary);

  pass = criterion_auc(summary);
  report(5, "auc correctness", pass, summary);

  SyntheticDataset dataset = generate(default_spec());
  ProtocolRuns runs = run_protocol(dataset);

  pass = criterion_failure_mode(runs, summary);
  report(6, "baseline failure mode", pass, summary);

  pass = criterion_modules_help(runs, summary);
  report(7, "module contributions", pass, summary);

  pass = criterion_sweeps(summary);
  report(8, "lambda sweeps", pass, summary);

  pass = criterion_cli_determinism(summary);
  report(9, "run reproducibility", pass, summary);

  if (failures == 0) {
    std::printf("acceptance: all 9 criteria pass\n");
    return 0;
  }
  std::printf("acceptance: %d criterion(s) failing\n", failures);
  return 1;
}
