#include "realid/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace realid {

namespace {

// log(sum_i exp(s_i)) with max subtraction, plus the softmax weights of the
// individual terms, which double as the gradient coefficients.
double log_sum_exp(const Vector& scores, Vector& weights) {
  double m = *std::max_element(scores.begin(), scores.end());
  weights.resize(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    weights[i] = std::exp(scores[i] - m);
    sum += weights[i];
  }
  for (std::size_t i = 0; i < scores.size(); ++i) weights[i] /= sum;
  return m + std::log(sum);
}

}  // namespace

TermGrad distinction_loss(const Vector& feature, const MemoryBank& own_bank,
                          const MemoryBank& other_bank, std::size_t nearest) {
  if (nearest >= own_bank.prototype_count) {
    throw std::invalid_argument("distinction_loss: nearest index out of range");
  }
  if (feature.size() != own_bank.feature_dim || feature.size() != other_bank.feature_dim) {
    throw std::invalid_argument("distinction_loss: feature dim mismatch");
  }
  Vector own_mean = mean_prototype(own_bank);
  Vector other_mean = mean_prototype(other_bank);

  Vector num_scores = {dot(own_bank.prototypes[nearest], feature), dot(own_mean, feature)};
  Vector den_scores(other_bank.prototype_count + 1);
  for (std::size_t k = 0; k < other_bank.prototype_count; ++k) {
    den_scores[k] = dot(other_bank.prototypes[k], feature);
  }
  den_scores[other_bank.prototype_count] = dot(other_mean, feature);

  Vector num_w;
  Vector den_w;
  double lse_num = log_sum_exp(num_scores, num_w);
  double lse_den = log_sum_exp(den_scores, den_w);

  TermGrad out;
  out.value = lse_den - lse_num;
  out.grad.assign(feature.size(), 0.0);
  for (std::size_t k = 0; k < other_bank.prototype_count; ++k) {
    axpy(den_w[k], other_bank.prototypes[k], out.grad);
  }
  axpy(den_w[other_bank.prototype_count], other_mean, out.grad);
  axpy(-num_w[0], own_bank.prototypes[nearest], out.grad);
  axpy(-num_w[1], own_mean, out.grad);
  return out;
}

TermGrad diversity_loss(const Vector& feature, const Vector& nearest_proto,
                        const Vector& second_proto, double alpha) {
  if (feature.size() != nearest_proto.size() || feature.size() != second_proto.size()) {
    throw std::invalid_argument("diversity_loss: dim mismatch");
  }
  Vector d1(feature.size());
  Vector d2(feature.size());
  for (std::size_t i = 0; i < feature.size(); ++i) {
    d1[i] = feature[i] - nearest_proto[i];
    d2[i] = feature[i] - second_proto[i];
  }
  double n1 = norm2(d1);
  double n2 = norm2(d2);
  double margin = n1 - n2 + alpha;

  TermGrad out;
  out.grad.assign(feature.size(), 0.0);
  if (margin > 0.0) {
    out.value = margin;
    if (n1 >= kNormEpsilon) axpy(1.0 / n1, d1, out.grad);
    if (n2 >= kNormEpsilon) axpy(-1.0 / n2, d2, out.grad);
  }
  return out;
}

TermGrad cross_entropy(const Vector& probs, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= probs.size()) {
    throw std::invalid_argument("cross_entropy: label out of range");
  }
  TermGrad out;
  out.value = -std::log(std::max(probs[static_cast<std::size_t>(label)], 1e-300));
  out.grad = probs;
  out.grad[static_cast<std::size_t>(label)] -= 1.0;
  return out;
}

TermGrad idc_regularizer(const Vector& probs, int label, double beta) {
  if (probs.size() != 4) throw std::invalid_argument("idc_regularizer: need 4 probabilities");
  if (label != 0 && label != 1) throw std::invalid_argument("idc_regularizer: binary label expected");
  std::size_t incorrect = label == 0 ? 1 : 0;
  std::size_t auxiliary = label == 0 ? 3 : 2;
  double d = probs[incorrect] - probs[auxiliary];

  TermGrad out;
  out.grad.assign(probs.size(), 0.0);
  if (std::abs(d) < 1.0) {
    out.value = beta * d * d;
    out.grad[incorrect] = 2.0 * beta * d;
    out.grad[auxiliary] = -2.0 * beta * d;
  } else {
    out.value = std::abs(d) - beta;
    double sign = d > 0.0 ? 1.0 : -1.0;
    out.grad[incorrect] = sign;
    out.grad[auxiliary] = -sign;
  }
  return out;
}

Vector softmax_pullback(const Vector& probs, const Vector& grad_probs) {
  if (probs.size() != grad_probs.size()) {
    throw std::invalid_argument("softmax_pullback: size mismatch");
  }
  double mixed = dot(grad_probs, probs);
  Vector out(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    out[i] = probs[i] * (grad_probs[i] - mixed);
  }
  return out;
}

LossBundle total_loss(const std::vector<SampleTerms>& samples, const LossWeights& weights) {
  if (samples.empty()) throw std::invalid_argument("total_loss: empty batch");
  const std::size_t n_all = samples.size();
  std::size_t n_proto = 0;
  for (const SampleTerms& s : samples) {
    if (s.has_prototype_terms) ++n_proto;
  }

  LossBundle bundle;
  bundle.grad_features.resize(n_all);
  bundle.grad_idc_logits.resize(n_all);

  double ce_sum = 0.0;
  double reg_sum = 0.0;
  double dist_sum = 0.0;
  double div_sum = 0.0;
  const double inv_all = 1.0 / static_cast<double>(n_all);
  const double inv_proto = n_proto > 0 ? 1.0 / static_cast<double>(n_proto) : 0.0;

  for (std::size_t j = 0; j < n_all; ++j) {
    const SampleTerms& s = samples[j];
    ce_sum += s.ce;
    reg_sum += s.reg;

    Vector glog;
    if (!s.ce_grad_logits.empty()) {
      glog.assign(s.ce_grad_logits.size(), 0.0);
      for (std::size_t i = 0; i < glog.size(); ++i) {
        glog[i] = s.ce_grad_logits[i] * inv_all;
      }
    }
    if (!s.reg_grad_logits.empty()) {
      if (glog.empty()) glog.assign(s.reg_grad_logits.size(), 0.0);
      axpy(weights.lambda3 * inv_all, s.reg_grad_logits, glog);
    }
    bundle.grad_idc_logits[j] = std::move(glog);

    if (s.has_prototype_terms) {
      dist_sum += s.distinction;
      div_sum += s.diversity;
      Vector gfeat(s.distinction_grad_feature.size(), 0.0);
      if (!s.distinction_grad_feature.empty()) {
        axpy(weights.lambda2 * inv_proto, s.distinction_grad_feature, gfeat);
      }
      if (!s.diversity_grad_feature.empty()) {
        if (gfeat.empty()) gfeat.assign(s.diversity_grad_feature.size(), 0.0);
        axpy(weights.lambda1 * inv_proto, s.diversity_grad_feature, gfeat);
      }
      bundle.grad_features[j] = std::move(gfeat);
    }
  }

  bundle.ce = ce_sum * inv_all;
  bundle.reg = reg_sum * inv_all;
  bundle.distinction = n_proto > 0 ? dist_sum * inv_proto : 0.0;
  bundle.diversity = n_proto > 0 ? div_sum * inv_proto : 0.0;
  bundle.total = bundle.ce + weights.lambda1 * bundle.diversity +
                 weights.lambda2 * bundle.distinction + weights.lambda3 * bundle.reg;
  return bundle;
}

}  // namespace realid
