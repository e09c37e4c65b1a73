#include "realid/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "realid/csv.hpp"
#include "realid/eval.hpp"

namespace realid {

namespace {

// Derived-stream ids for the independent randomness consumers.
enum : std::uint64_t {
  kStreamParams = 0,
  kStreamRealBank = 1,
  kStreamFakeBank = 2,
  kStreamShuffle = 3,
};

void validate_config(const TrainConfig& cfg) {
  if (cfg.input_dim == 0) throw std::invalid_argument("config: input_dim must be positive");
  if (cfg.feature_dim == 0) throw std::invalid_argument("config: feature_dim must be positive");
  if (cfg.batch_per_class == 0) throw std::invalid_argument("config: batch_per_class must be positive");
  if (cfg.prototype_count < 2) throw std::invalid_argument("config: need at least 2 prototypes");
  if (cfg.learning_rate <= 0.0) throw std::invalid_argument("config: learning_rate must be positive");
  if (cfg.momentum < 0.0 || cfg.momentum >= 1.0) {
    throw std::invalid_argument("config: momentum must lie in [0, 1)");
  }
}

void sgd_apply(std::vector<double>& param, std::vector<double>& vel,
               const std::vector<double>& grad, double lr, double mu) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    vel[i] = mu * vel[i] + grad[i];
    param[i] -= lr * vel[i];
  }
}

void backprop_extractor(const ExtractorParams& params, const ExtractorTrace& trace,
                        const Vector& grad_feature, std::vector<Matrix>& dw,
                        std::vector<Vector>& db) {
  Vector delta = grad_feature;  // output layer is linear
  for (std::size_t l = params.weights.size(); l-- > 0;) {
    const Vector& a_prev = trace.activations[l];
    Matrix& dwl = dw[l];
    for (std::size_t i = 0; i < delta.size(); ++i) {
      for (std::size_t j = 0; j < a_prev.size(); ++j) {
        dwl(i, j) += delta[i] * a_prev[j];
      }
      db[l][i] += delta[i];
    }
    if (l > 0) {
      Vector next = matvec_transposed(params.weights[l], delta);
      const Vector& z = trace.preacts[l - 1];
      for (std::size_t i = 0; i < next.size(); ++i) {
        if (z[i] <= 0.0) next[i] = 0.0;
      }
      delta = std::move(next);
    }
  }
}

BatchGradients zero_gradients(const ExtractorParams& extractor, const HeadParams& head) {
  BatchGradients g;
  g.extractor_w.reserve(extractor.weights.size());
  g.extractor_b.reserve(extractor.biases.size());
  for (const Matrix& w : extractor.weights) g.extractor_w.emplace_back(w.rows, w.cols);
  for (const Vector& b : extractor.biases) g.extractor_b.emplace_back(b.size(), 0.0);
  g.head_w = Matrix(head.weight.rows, head.weight.cols);
  g.head_b.assign(head.bias.size(), 0.0);
  return g;
}

Matrix memory_path_features(const std::vector<Vector>& feats, std::size_t begin,
                            std::size_t count, bool normalize) {
  Matrix out(count, feats[begin].size());
  for (std::size_t j = 0; j < count; ++j) {
    Vector row = normalize ? l2_normalize(feats[begin + j]) : feats[begin + j];
    for (std::size_t c = 0; c < row.size(); ++c) out(j, c) = row[c];
  }
  return out;
}

// Smallest separation between the top scores of each correlation column;
// assignments stay put under perturbations smaller than this.
void note_assignment_gaps(const CorrelationTensors& corr, BatchDiagnostics* diag) {
  for (std::size_t j = 0; j < corr.raw.cols; ++j) {
    double top1 = -1e300;
    double top2 = -1e300;
    double top3 = -1e300;
    for (std::size_t i = 0; i < corr.raw.rows; ++i) {
      double s = corr.raw(i, j);
      if (s > top1) {
        top3 = top2;
        top2 = top1;
        top1 = s;
      } else if (s > top2) {
        top3 = top2;
        top2 = s;
      } else if (s > top3) {
        top3 = s;
      }
    }
    diag->min_assignment_gap = std::min(diag->min_assignment_gap, top1 - top2);
    if (corr.raw.rows > 2) {
      diag->min_assignment_gap = std::min(diag->min_assignment_gap, top2 - top3);
    }
  }
}

}  // namespace

ExtractorParams init_extractor(const std::vector<std::size_t>& widths, SeededRng& rng) {
  if (widths.size() < 2) throw std::invalid_argument("init_extractor: need input and output widths");
  for (std::size_t w : widths) {
    if (w == 0) throw std::invalid_argument("init_extractor: zero layer width");
  }
  ExtractorParams params;
  params.widths = widths;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    Matrix w(widths[l + 1], widths[l]);
    double scale = 1.0 / std::sqrt(static_cast<double>(widths[l]));
    for (std::size_t i = 0; i < w.rows; ++i) {
      for (std::size_t j = 0; j < w.cols; ++j) w(i, j) = scale * rng.gaussian();
    }
    params.weights.push_back(std::move(w));
    params.biases.emplace_back(widths[l + 1], 0.0);
  }
  return params;
}

Vector extract(const ExtractorParams& params, const Vector& x) {
  ExtractorTrace trace;
  return extract_traced(params, x, trace);
}

Vector extract_traced(const ExtractorParams& params, const Vector& x, ExtractorTrace& trace) {
  if (x.size() != params.widths.front()) {
    throw std::invalid_argument("extract: input dim mismatch");
  }
  trace.activations.clear();
  trace.preacts.clear();
  trace.activations.push_back(x);
  Vector a = x;
  const std::size_t layers = params.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    const Matrix& w = params.weights[l];
    const Vector& b = params.biases[l];
    Vector z(w.rows);
    for (std::size_t i = 0; i < w.rows; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < w.cols; ++j) s += w(i, j) * a[j];
      z[i] = s + b[i];
    }
    trace.preacts.push_back(z);
    if (l + 1 < layers) {
      for (double& v : z) v = v > 0.0 ? v : 0.0;
    }
    trace.activations.push_back(z);
    a = std::move(z);
  }
  return a;
}

HeadParams init_head(std::size_t outputs, std::size_t feature_dim, SeededRng& rng) {
  if (outputs < 2) throw std::invalid_argument("init_head: need at least 2 outputs");
  HeadParams head;
  head.weight = Matrix(outputs, feature_dim);
  double scale = 1.0 / std::sqrt(static_cast<double>(feature_dim));
  for (std::size_t i = 0; i < outputs; ++i) {
    for (std::size_t j = 0; j < feature_dim; ++j) head.weight(i, j) = scale * rng.gaussian();
  }
  head.bias.assign(outputs, 0.0);
  return head;
}

Vector head_logits(const HeadParams& head, const Vector& feature) {
  if (feature.size() != head.weight.cols) {
    throw std::invalid_argument("head_logits: feature dim mismatch");
  }
  Vector z(head.weight.rows);
  for (std::size_t i = 0; i < head.weight.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < head.weight.cols; ++j) s += head.weight(i, j) * feature[j];
    z[i] = s + head.bias[i];
  }
  return z;
}

Vector idc_forward(const HeadParams& head, const Vector& feature) {
  return softmax(head_logits(head, feature));
}

double predict_score(const Vector& probs, ScoreMode mode) {
  if (probs.size() < 2) throw std::invalid_argument("predict_score: need at least 2 outputs");
  if (mode == ScoreMode::kRaw) return probs[1];
  double mass = probs[0] + probs[1];
  if (mass <= 0.0) return 0.5;
  return probs[1] / mass;
}

TrainState init_train_state(const TrainConfig& config) {
  validate_config(config);
  TrainState state;
  state.config = config;

  std::vector<std::size_t> widths;
  widths.push_back(config.input_dim);
  for (std::size_t h : config.hidden) widths.push_back(h);
  widths.push_back(config.feature_dim);

  SeededRng param_rng = SeededRng::derive(config.seed, kStreamParams);
  state.extractor = init_extractor(widths, param_rng);
  state.head = init_head(config.enable_idc ? 4 : 2, config.feature_dim, param_rng);

  SeededRng real_rng = SeededRng::derive(config.seed, kStreamRealBank);
  SeededRng fake_rng = SeededRng::derive(config.seed, kStreamFakeBank);
  state.real_bank = init_bank(config.prototype_count, config.feature_dim, ClassRole::kReal, real_rng);
  state.fake_bank = init_bank(config.prototype_count, config.feature_dim, ClassRole::kFake, fake_rng);

  state.velocity.extractor_w.reserve(state.extractor.weights.size());
  for (const Matrix& w : state.extractor.weights) {
    state.velocity.extractor_w.emplace_back(w.rows, w.cols);
  }
  for (const Vector& b : state.extractor.biases) {
    state.velocity.extractor_b.emplace_back(b.size(), 0.0);
  }
  state.velocity.head_w = Matrix(state.head.weight.rows, state.head.weight.cols);
  state.velocity.head_b.assign(state.head.bias.size(), 0.0);

  state.shuffle_rng = SeededRng::derive(config.seed, kStreamShuffle);
  return state;
}

LossBundle compute_batch(const ExtractorParams& extractor, const HeadParams& head,
                         const MemoryBank* real_bank, const MemoryBank* fake_bank,
                         const TrainConfig& config, const Matrix& real_inputs,
                         const Matrix& fake_inputs, BatchGradients* grads,
                         MemorySnapshot* snapshot, BatchDiagnostics* diag) {
  const std::size_t n = real_inputs.rows;
  if (n == 0 || fake_inputs.rows != n) {
    throw std::invalid_argument("compute_batch: need equal non-empty real and fake halves");
  }
  if (real_inputs.cols != extractor.widths.front() ||
      fake_inputs.cols != extractor.widths.front()) {
    throw std::invalid_argument("compute_batch: input dim mismatch");
  }
  const std::size_t total = 2 * n;

  std::vector<ExtractorTrace> traces(total);
  std::vector<Vector> feats(total);
  for (std::size_t j = 0; j < n; ++j) {
    feats[j] = extract_traced(extractor, real_inputs.row(j), traces[j]);
    feats[n + j] = extract_traced(extractor, fake_inputs.row(j), traces[n + j]);
  }
  if (diag) {
    for (const ExtractorTrace& t : traces) {
      for (std::size_t l = 0; l + 1 < t.preacts.size(); ++l) {
        for (double z : t.preacts[l]) {
          diag->min_abs_preact = std::min(diag->min_abs_preact, std::abs(z));
        }
      }
    }
  }

  MemorySnapshot local_snapshot;
  MemorySnapshot* mem = snapshot ? snapshot : &local_snapshot;
  mem->active = false;
  if (config.enable_realc2) {
    if (!real_bank || !fake_bank) {
      throw std::invalid_argument("compute_batch: prototype losses need both banks");
    }
    mem->active = true;
    mem->real_features = memory_path_features(feats, 0, n, config.normalize_features);
    mem->fake_features = memory_path_features(feats, n, n, config.normalize_features);
    mem->real_corr = correlate(*real_bank, mem->real_features);
    mem->real_table = assign(mem->real_corr);
    mem->fake_corr = correlate(*fake_bank, mem->fake_features);
    mem->fake_table = assign(mem->fake_corr);
    if (diag) {
      note_assignment_gaps(mem->real_corr, diag);
      note_assignment_gaps(mem->fake_corr, diag);
    }
  }

  std::vector<SampleTerms> terms(total);
  for (std::size_t j = 0; j < total; ++j) {
    const int label = j < n ? 0 : 1;
    Vector probs = softmax(head_logits(head, feats[j]));
    TermGrad ce = cross_entropy(probs, label);
    terms[j].ce = ce.value;
    terms[j].ce_grad_logits = std::move(ce.grad);

    if (config.enable_idc) {
      TermGrad reg = idc_regularizer(probs, label, config.weights.beta);
      terms[j].reg = reg.value;
      terms[j].reg_grad_logits = softmax_pullback(probs, reg.grad);
      if (diag) {
        double d = label == 0 ? probs[1] - probs[3] : probs[0] - probs[2];
        diag->min_reg_gap_to_one = std::min(diag->min_reg_gap_to_one, std::abs(std::abs(d) - 1.0));
      }
    }

    if (config.enable_realc2 && (label == 0 || config.symmetric_fake_losses)) {
      const MemoryBank* own = label == 0 ? real_bank : fake_bank;
      const MemoryBank* other = label == 0 ? fake_bank : real_bank;
      const AssignmentTable& table = label == 0 ? mem->real_table : mem->fake_table;
      const std::size_t idx = label == 0 ? j : j - n;
      const std::size_t p1 = table.nearest[idx];
      const std::size_t p2 = table.second_nearest[idx];
      TermGrad dist = distinction_loss(feats[j], *own, *other, p1);
      TermGrad div =
          diversity_loss(feats[j], own->prototypes[p1], own->prototypes[p2], config.weights.alpha);
      terms[j].has_prototype_terms = true;
      terms[j].distinction = dist.value;
      terms[j].distinction_grad_feature = std::move(dist.grad);
      terms[j].diversity = div.value;
      terms[j].diversity_grad_feature = std::move(div.grad);
      if (diag) {
        Vector d1 = feats[j];
        Vector d2 = feats[j];
        axpy(-1.0, own->prototypes[p1], d1);
        axpy(-1.0, own->prototypes[p2], d2);
        double n1 = norm2(d1);
        double n2 = norm2(d2);
        diag->min_diversity_margin_abs =
            std::min(diag->min_diversity_margin_abs, std::abs(n1 - n2 + config.weights.alpha));
        diag->min_diversity_norm = std::min({diag->min_diversity_norm, n1, n2});
      }
    }
  }

  LossBundle bundle = total_loss(terms, config.weights);

  if (grads) {
    *grads = zero_gradients(extractor, head);
    for (std::size_t j = 0; j < total; ++j) {
      const Vector& glog = bundle.grad_idc_logits[j];
      if (!glog.empty()) {
        for (std::size_t i = 0; i < head.weight.rows; ++i) {
          for (std::size_t r = 0; r < head.weight.cols; ++r) {
            grads->head_w(i, r) += glog[i] * feats[j][r];
          }
          grads->head_b[i] += glog[i];
        }
      }
      Vector gf = glog.empty() ? Vector(feats[j].size(), 0.0)
                               : matvec_transposed(head.weight, glog);
      if (!bundle.grad_features[j].empty()) {
        axpy(1.0, bundle.grad_features[j], gf);
      }
      backprop_extractor(extractor, traces[j], gf, grads->extractor_w, grads->extractor_b);
    }
  }
  return bundle;
}

LossBundle train_step(TrainState& state, const Matrix& real_inputs, const Matrix& fake_inputs) {
  const TrainConfig& cfg = state.config;
  if (real_inputs.rows != cfg.batch_per_class || fake_inputs.rows != cfg.batch_per_class) {
    throw std::invalid_argument("train_step: batch size does not match config");
  }
  BatchGradients grads;
  MemorySnapshot snapshot;
  LossBundle bundle = compute_batch(state.extractor, state.head,
                                    cfg.enable_realc2 ? &state.real_bank : nullptr,
                                    cfg.enable_realc2 ? &state.fake_bank : nullptr, cfg,
                                    real_inputs, fake_inputs, &grads, &snapshot, nullptr);

  for (std::size_t l = 0; l < state.extractor.weights.size(); ++l) {
    sgd_apply(state.extractor.weights[l].data, state.velocity.extractor_w[l].data,
              grads.extractor_w[l].data, cfg.learning_rate, cfg.momentum);
    sgd_apply(state.extractor.biases[l], state.velocity.extractor_b[l], grads.extractor_b[l],
              cfg.learning_rate, cfg.momentum);
  }
  sgd_apply(state.head.weight.data, state.velocity.head_w.data, grads.head_w.data,
            cfg.learning_rate, cfg.momentum);
  sgd_apply(state.head.bias, state.velocity.head_b, grads.head_b, cfg.learning_rate, cfg.momentum);

  // Prototype refresh comes after the optimizer step and reuses this batch's
  // pre-step features and correlations.
  if (snapshot.active) {
    update_bank(state.real_bank, snapshot.real_features, snapshot.real_corr, snapshot.real_table);
    update_bank(state.fake_bank, snapshot.fake_features, snapshot.fake_corr, snapshot.fake_table);
  }
  return bundle;
}

double model_score(const TrainState& state, const Vector& x) {
  return predict_score(idc_forward(state.head, extract(state.extractor, x)),
                       state.config.score_mode);
}

namespace {

double split_accuracy(const TrainState& state, const std::vector<Sample>& samples) {
  if (samples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const Sample& s : samples) {
    int predicted = model_score(state, s.x) > 0.5 ? 1 : 0;
    if (predicted == s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

double split_auc_or_nan(const TrainState& state, const std::vector<Sample>& samples) {
  bool has_real = false;
  bool has_fake = false;
  for (const Sample& s : samples) {
    (s.label == 0 ? has_real : has_fake) = true;
  }
  if (!has_real || !has_fake) return std::nan("");
  Vector scores;
  std::vector<int> labels;
  scores.reserve(samples.size());
  labels.reserve(samples.size());
  for (const Sample& s : samples) {
    scores.push_back(model_score(state, s.x));
    labels.push_back(s.label);
  }
  if (!all_finite(scores)) return std::nan("");
  return auc(scores, labels);
}

}  // namespace

TrainResult train(const TrainConfig& config, const SyntheticDataset& dataset) {
  if (dataset.train.empty()) throw std::invalid_argument("train: empty train split");
  if (dataset.input_dim != config.input_dim) {
    throw std::invalid_argument("train: dataset dim does not match config");
  }
  TrainState state = init_train_state(config);

  std::vector<std::size_t> real_idx;
  std::vector<std::size_t> fake_idx;
  for (std::size_t i = 0; i < dataset.train.size(); ++i) {
    (dataset.train[i].label == 0 ? real_idx : fake_idx).push_back(i);
  }

  const std::size_t n = config.batch_per_class;
  std::vector<EpochRecord> history;
  history.reserve(config.epochs);
  Matrix real_x(n, config.input_dim);
  Matrix fake_x(n, config.input_dim);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    state.shuffle_rng.shuffle(real_idx);
    state.shuffle_rng.shuffle(fake_idx);
    const std::size_t steps = std::min(real_idx.size(), fake_idx.size()) / n;

    EpochRecord rec;
    rec.epoch = epoch;
    for (std::size_t s = 0; s < steps; ++s) {
      for (std::size_t t = 0; t < n; ++t) {
        const Vector& xr = dataset.train[real_idx[s * n + t]].x;
        const Vector& xf = dataset.train[fake_idx[s * n + t]].x;
        for (std::size_t c = 0; c < config.input_dim; ++c) {
          real_x(t, c) = xr[c];
          fake_x(t, c) = xf[c];
        }
      }
      LossBundle bundle = train_step(state, real_x, fake_x);
      rec.ce += bundle.ce;
      rec.diversity += bundle.diversity;
      rec.distinction += bundle.distinction;
      rec.reg += bundle.reg;
      rec.total += bundle.total;
    }
    if (steps > 0) {
      const double inv = 1.0 / static_cast<double>(steps);
      rec.ce *= inv;
      rec.diversity *= inv;
      rec.distinction *= inv;
      rec.reg *= inv;
      rec.total *= inv;
    }
    rec.train_accuracy = split_accuracy(state, dataset.train);
    rec.test_iid_auc = split_auc_or_nan(state, dataset.test_iid);
    history.push_back(rec);
  }
  return {std::move(state), std::move(history)};
}

void write_history_csv(const std::vector<EpochRecord>& history, const std::string& path) {
  FileWriter out(path);
  std::fprintf(out.get(), "epoch,ce,diversity,distinction,reg,total,train_accuracy,test_iid_auc\n");
  for (const EpochRecord& r : history) {
    std::fprintf(out.get(), "%zu,%s,%s,%s,%s,%s,%s,%s\n", r.epoch, format_g17(r.ce).c_str(),
                 format_g17(r.diversity).c_str(), format_g17(r.distinction).c_str(),
                 format_g17(r.reg).c_str(), format_g17(r.total).c_str(),
                 format_g17(r.train_accuracy).c_str(), format_g17(r.test_iid_auc).c_str());
  }
}

}  // namespace realid
