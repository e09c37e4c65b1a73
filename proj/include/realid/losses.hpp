#ifndef REALID_LOSSES_HPP_
#define REALID_LOSSES_HPP_

#include <vector>

#include "realid/memory.hpp"

namespace realid {

struct LossWeights {
  double lambda1 = 0.6;  // diversity
  double lambda2 = 1.0;  // distinction
  double lambda3 = 1.0;  // decision regularizer
  double alpha = 1.0;    // diversity margin
  double beta = 0.5;     // regularizer intensity
};

/// A scalar loss term together with its gradient in one argument.
struct TermGrad {
  double value = 0.0;
  Vector grad;
};

/// -log of the softmax-style contrast between the feature's own nearest
/// prototype plus own bank mean (numerator) and every prototype of the
/// opposing bank plus its mean (denominator). Computed through log-sum-exp;
/// the gradient is with respect to the feature.
TermGrad distinction_loss(const Vector& feature, const MemoryBank& own_bank,
                          const MemoryBank& other_bank, std::size_t nearest);

/// Hinge on ||f - m1|| - ||f - m2|| + alpha, pushing the feature's two
/// nearest prototypes apart in usefulness. Gradient w.r.t. the feature;
/// zero outside the hinge, on its boundary, and for any distance term
/// whose norm is degenerate.
TermGrad diversity_loss(const Vector& feature, const Vector& nearest_proto,
                        const Vector& second_proto, double alpha);

/// -log probs[label]; the gradient is with respect to the pre-softmax
/// logits (probs - onehot), the usual fused form.
TermGrad cross_entropy(const Vector& probs, int label);

/// Penalty on the gap d between the incorrect-class probability and its
/// paired auxiliary probability: beta*d^2 while |d| < 1, |d| - beta
/// beyond. Gradient w.r.t. the probability vector itself. For label 0 the
/// pair is (probs[1], probs[3]); for label 1 it is (probs[0], probs[2]).
TermGrad idc_regularizer(const Vector& probs, int label, double beta);

/// Pulls a probability-space gradient back through the softmax that
/// produced probs: g_logit[b] = p[b] * (g[b] - <g, p>).
Vector softmax_pullback(const Vector& probs, const Vector& grad_probs);

/// Per-sample ingredients for the batch reduction. Gradient vectors may be
/// empty when the term does not apply to that sample.
struct SampleTerms {
  double ce = 0.0;
  Vector ce_grad_logits;
  double reg = 0.0;
  Vector reg_grad_logits;  // already pulled back through the softmax
  bool has_prototype_terms = false;
  double distinction = 0.0;
  Vector distinction_grad_feature;
  double diversity = 0.0;
  Vector diversity_grad_feature;
};

/// Batch-reduced losses. Every term is the arithmetic mean over its
/// contributing samples; the stored per-sample gradients carry the mean
/// factors and lambda weights already, split into the direct feature path
/// (distinction + diversity) and the classifier path (ce + regularizer).
struct LossBundle {
  double ce = 0.0;
  double diversity = 0.0;
  double distinction = 0.0;
  double reg = 0.0;
  double total = 0.0;
  std::vector<Vector> grad_features;
  std::vector<Vector> grad_idc_logits;
};

LossBundle total_loss(const std::vector<SampleTerms>& samples, const LossWeights& weights);

}  // namespace realid

#endif  // REALID_LOSSES_HPP_
