#include "realid/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

#include "realid/losses.hpp"
#include "realid/model.hpp"

namespace realid {

namespace {

constexpr double kKinkGuard = 1e-3;  // minimum distance to any non-smooth point

Vector random_unit(SeededRng& rng, std::size_t dim) {
  bool degenerate = true;
  Vector v;
  while (degenerate) v = l2_normalize(rng_gaussian(rng, dim), &degenerate);
  return v;
}

MemoryBank random_bank(SeededRng& rng, std::size_t k, std::size_t c, ClassRole role) {
  MemoryBank bank;
  bank.role = role;
  bank.prototype_count = k;
  bank.feature_dim = c;
  for (std::size_t i = 0; i < k; ++i) bank.prototypes.push_back(random_unit(rng, c));
  return bank;
}

GradSuiteResult check_distinction(SeededRng& rng, std::size_t configs, bool corrupt) {
  GradSuiteResult result{"distinction", 0.0, configs, false};
  const std::size_t c = 6;
  for (std::size_t i = 0; i < configs; ++i) {
    std::size_t k_own = 2 + rng.uniform_index(4);
    std::size_t k_other = 2 + rng.uniform_index(4);
    MemoryBank own = random_bank(rng, k_own, c, ClassRole::kReal);
    MemoryBank other = random_bank(rng, k_other, c, ClassRole::kFake);
    Vector f = rng_gaussian(rng, c);
    double scale = 0.5 + 1.5 * rng.uniform();
    for (double& v : f) v *= scale;
    std::size_t nearest = rng.uniform_index(k_own);

    Vector analytic = distinction_loss(f, own, other, nearest).grad;
    if (corrupt && i == 0) analytic[0] += 1e-3;
    Vector fd = central_diff(
        [&](const Vector& x) { return distinction_loss(x, own, other, nearest).value; }, f,
        kFdStep);
    result.max_rel_err = std::max(result.max_rel_err, relative_error(analytic, fd));
  }
  result.pass = result.max_rel_err < kGradTolerance;
  return result;
}

GradSuiteResult check_diversity(SeededRng& rng, std::size_t configs) {
  GradSuiteResult result{"diversity", 0.0, configs, false};
  const std::size_t c = 6;
  for (std::size_t i = 0; i < configs; ++i) {
    Vector f;
    Vector m1;
    Vector m2;
    double alpha = 0.0;
    while (true) {
      m1 = random_unit(rng, c);
      m2 = random_unit(rng, c);
      f = rng_gaussian(rng, c);
      alpha = 0.2 + 1.3 * rng.uniform();
      Vector d1 = f;
      Vector d2 = f;
      axpy(-1.0, m1, d1);
      axpy(-1.0, m2, d2);
      double n1 = norm2(d1);
      double n2 = norm2(d2);
      if (n1 > kKinkGuard && n2 > kKinkGuard && std::abs(n1 - n2 + alpha) > kKinkGuard) break;
    }
    Vector analytic = diversity_loss(f, m1, m2, alpha).grad;
    Vector fd = central_diff(
        [&](const Vector& x) { return diversity_loss(x, m1, m2, alpha).value; }, f, kFdStep);
    result.max_rel_err = std::max(result.max_rel_err, relative_error(analytic, fd));
  }
  result.pass = result.max_rel_err < kGradTolerance;
  return result;
}

GradSuiteResult check_cross_entropy(SeededRng& rng, std::size_t configs) {
  GradSuiteResult result{"cross_entropy", 0.0, configs, false};
  for (std::size_t i = 0; i < configs; ++i) {
    std::size_t dim = i % 2 == 0 ? 4 : 2;
    Vector logits = rng_gaussian(rng, dim);
    for (double& v : logits) v *= 2.0;
    int label = static_cast<int>(rng.uniform_index(2));

    Vector analytic = cross_entropy(softmax(logits), label).grad;
    Vector fd = central_diff(
        [&](const Vector& z) { return cross_entropy(softmax(z), label).value; }, logits, kFdStep);
    result.max_rel_err = std::max(result.max_rel_err, relative_error(analytic, fd));
  }
  result.pass = result.max_rel_err < kGradTolerance;
  return result;
}

GradSuiteResult check_regularizer(SeededRng& rng, std::size_t configs) {
  GradSuiteResult result{"regularizer", 0.0, configs, false};
  for (std::size_t i = 0; i < configs; ++i) {
    Vector output;
    int label = 0;
    double beta = 0.0;
    while (true) {
      // Off-simplex probes are fine here: the formula is defined on any
      // 4-vector and |d| > 1 exercises the linear branch.
      output.assign(4, 0.0);
      for (double& v : output) v = -1.0 + 2.5 * rng.uniform();
      label = static_cast<int>(rng.uniform_index(2));
      beta = 0.1 + 0.9 * rng.uniform();
      double d = label == 0 ? output[1] - output[3] : output[0] - output[2];
      if (std::abs(std::abs(d) - 1.0) > kKinkGuard) break;
    }
    Vector analytic = idc_regularizer(output, label, beta).grad;
    Vector fd = central_diff(
        [&](const Vector& o) { return idc_regularizer(o, label, beta).value; }, output, kFdStep);
    result.max_rel_err = std::max(result.max_rel_err, relative_error(analytic, fd));
  }
  result.pass = result.max_rel_err < kGradTolerance;
  return result;
}

Vector flatten_extractor(const ExtractorParams& p) {
  Vector flat;
  for (const Matrix& w : p.weights) flat.insert(flat.end(), w.data.begin(), w.data.end());
  for (const Vector& b : p.biases) flat.insert(flat.end(), b.begin(), b.end());
  return flat;
}

void set_extractor(ExtractorParams& p, const Vector& flat) {
  std::size_t pos = 0;
  for (Matrix& w : p.weights) {
    for (double& v : w.data) v = flat[pos++];
  }
  for (Vector& b : p.biases) {
    for (double& v : b) v = flat[pos++];
  }
}

Vector flatten_head(const HeadParams& h) {
  Vector flat(h.weight.data);
  flat.insert(flat.end(), h.bias.begin(), h.bias.end());
  return flat;
}

void set_head(HeadParams& h, const Vector& flat) {
  std::size_t pos = 0;
  for (double& v : h.weight.data) v = flat[pos++];
  for (double& v : h.bias) v = flat[pos++];
}

Vector flatten_extractor_grads(const BatchGradients& g) {
  Vector flat;
  for (const Matrix& w : g.extractor_w) flat.insert(flat.end(), w.data.begin(), w.data.end());
  for (const Vector& b : g.extractor_b) flat.insert(flat.end(), b.begin(), b.end());
  return flat;
}

Vector flatten_head_grads(const BatchGradients& g) {
  Vector flat(g.head_w.data);
  flat.insert(flat.end(), g.head_b.begin(), g.head_b.end());
  return flat;
}

struct ParamProbe {
  ExtractorParams extractor;
  HeadParams head;
  MemoryBank real_bank;
  MemoryBank fake_bank;
  TrainConfig config;
  Matrix real_x;
  Matrix fake_x;
};

bool probe_is_smooth(const ParamProbe& probe, BatchGradients* grads, LossBundle* bundle) {
  BatchDiagnostics diag;
  LossBundle local = compute_batch(probe.extractor, probe.head,
                                   probe.config.enable_realc2 ? &probe.real_bank : nullptr,
                                   probe.config.enable_realc2 ? &probe.fake_bank : nullptr,
                                   probe.config, probe.real_x, probe.fake_x, grads, nullptr,
                                   &diag);
  if (bundle) *bundle = local;
  if (diag.min_abs_preact < kKinkGuard) return false;
  if (probe.config.enable_idc && diag.min_reg_gap_to_one < kKinkGuard) return false;
  if (probe.config.enable_realc2) {
    if (diag.min_diversity_margin_abs < kKinkGuard) return false;
    if (diag.min_diversity_norm < kKinkGuard) return false;
    if (diag.min_assignment_gap < kKinkGuard) return false;
  }
  return true;
}

ParamProbe make_probe(SeededRng& rng, bool realc2, bool idc, std::size_t batch) {
  for (std::size_t attempt = 0; attempt < 500; ++attempt) {
    ParamProbe probe;
    probe.config.input_dim = 3;
    probe.config.hidden = {6};
    probe.config.feature_dim = 5;
    probe.config.prototype_count = 3;
    probe.config.batch_per_class = batch;
    probe.config.enable_realc2 = realc2;
    probe.config.enable_idc = idc;
    probe.config.symmetric_fake_losses = realc2 && rng.uniform() < 0.5;
    probe.config.normalize_features = realc2 && rng.uniform() < 0.5;
    probe.config.weights.lambda1 = 0.3 + rng.uniform();
    probe.config.weights.lambda2 = 0.3 + rng.uniform();
    probe.config.weights.lambda3 = 0.3 + rng.uniform();
    probe.config.weights.alpha = 0.3 + rng.uniform();
    probe.config.weights.beta = 0.2 + 0.6 * rng.uniform();

    std::vector<std::size_t> widths = {probe.config.input_dim, 6, probe.config.feature_dim};
    probe.extractor = init_extractor(widths, rng);
    probe.head = init_head(idc ? 4 : 2, probe.config.feature_dim, rng);
    probe.real_bank = random_bank(rng, 3, probe.config.feature_dim, ClassRole::kReal);
    probe.fake_bank = random_bank(rng, 3, probe.config.feature_dim, ClassRole::kFake);
    probe.real_x = Matrix(batch, 3);
    probe.fake_x = Matrix(batch, 3);
    for (double& v : probe.real_x.data) v = 2.0 * rng.gaussian();
    for (double& v : probe.fake_x.data) v = 2.0 * rng.gaussian();

    if (probe_is_smooth(probe, nullptr, nullptr)) return probe;
  }
  throw std::runtime_error("gradcheck: could not sample a kink-free configuration");
}

double probe_value(ParamProbe& probe) {
  return compute_batch(probe.extractor, probe.head,
                       probe.config.enable_realc2 ? &probe.real_bank : nullptr,
                       probe.config.enable_realc2 ? &probe.fake_bank : nullptr, probe.config,
                       probe.real_x, probe.fake_x, nullptr, nullptr, nullptr)
      .total;
}

GradSuiteResult check_extractor_params(SeededRng& rng, std::size_t configs) {
  GradSuiteResult result{"extractor_params", 0.0, configs, false};
  for (std::size_t i = 0; i < configs; ++i) {
    ParamProbe probe = make_probe(rng, false, false, 1);
    BatchGradients grads;
    probe_is_smooth(probe, &grads, nullptr);
    Vector analytic = flatten_extractor_grads(grads);

    Vector flat = flatten_extractor(probe.extractor);
    Vector fd = central_diff(
        [&](const Vector& v) {
          set_extractor(probe.extractor, v);
          return probe_value(probe);
        },
        flat, kFdStep);
    set_extractor(probe.extractor, flat);
    result.max_rel_err = std::max(result.max_rel_err, relative_error(analytic, fd));
  }
  result.pass = result.max_rel_err < kGradTolerance;
  return result;
}

GradSuiteResult check_head_params(SeededRng& rng, std::size_t configs) {
  GradSuiteResult result{"head_params", 0.0, configs, false};
  for (std::size_t i = 0; i < configs; ++i) {
    ParamProbe probe = make_probe(rng, false, true, 1);
    BatchGradients grads;
    probe_is_smooth(probe, &grads, nullptr);
    Vector analytic = flatten_head_grads(grads);

    Vector flat = flatten_head(probe.head);
    Vector fd = central_diff(
        [&](const Vector& v) {
          set_head(probe.head, v);
          return probe_value(probe);
        },
        flat, kFdStep);
    set_head(probe.head, flat);
    result.max_rel_err = std::max(result.max_rel_err, relative_error(analytic, fd));
  }
  result.pass = result.max_rel_err < kGradTolerance;
  return result;
}

GradSuiteResult check_end_to_end(SeededRng& rng, std::size_t configs) {
  GradSuiteResult result{"end_to_end", 0.0, configs, false};
  for (std::size_t i = 0; i < configs; ++i) {
    ParamProbe probe = make_probe(rng, true, true, 2);
    BatchGradients grads;
    probe_is_smooth(probe, &grads, nullptr);
    Vector analytic = flatten_extractor_grads(grads);
    Vector head_part = flatten_head_grads(grads);
    analytic.insert(analytic.end(), head_part.begin(), head_part.end());

    Vector flat = flatten_extractor(probe.extractor);
    Vector head_flat = flatten_head(probe.head);
    const std::size_t split = flat.size();
    flat.insert(flat.end(), head_flat.begin(), head_flat.end());
    Vector fd = central_diff(
        [&](const Vector& v) {
          set_extractor(probe.extractor, Vector(v.begin(), v.begin() + split));
          set_head(probe.head, Vector(v.begin() + split, v.end()));
          return probe_value(probe);
        },
        flat, kFdStep);
    set_extractor(probe.extractor, Vector(flat.begin(), flat.begin() + split));
    set_head(probe.head, Vector(flat.begin() + split, flat.end()));
    result.max_rel_err = std::max(result.max_rel_err, relative_error(analytic, fd));
  }
  result.pass = result.max_rel_err < kGradTolerance;
  return result;
}

}  // namespace

std::vector<GradSuiteResult> run_gradcheck(std::uint64_t seed, std::size_t configs_per_suite,
                                           bool corrupt) {
  if (configs_per_suite == 0) throw std::invalid_argument("run_gradcheck: need at least 1 config");
  SeededRng rng = SeededRng::derive(seed, 100);
  std::vector<GradSuiteResult> results;
  results.push_back(check_distinction(rng, configs_per_suite, corrupt));
  results.push_back(check_diversity(rng, configs_per_suite));
  results.push_back(check_cross_entropy(rng, configs_per_suite));
  results.push_back(check_regularizer(rng, configs_per_suite));
  results.push_back(check_extractor_params(rng, configs_per_suite));
  results.push_back(check_head_params(rng, configs_per_suite));
  results.push_back(check_end_to_end(rng, configs_per_suite));
  return results;
}

bool gradcheck_passed(const std::vector<GradSuiteResult>& results) {
  for (const GradSuiteResult& r : results) {
    if (!r.pass) return false;
  }
  return true;
}

}  // namespace realid
