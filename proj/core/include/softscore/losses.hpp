#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "softscore/core.hpp"
#include "softscore/recovery.hpp"

namespace softscore {

struct LossConfig {
  // Weight of the label terms against the fidelity term.
  double gamma = 0.05;
  // Floor on predicted probabilities inside the logarithm.
  double epsilon_log = 1e-12;

  void validate() const;
};

/// Floor on the predicted variance sum used inside the comparison
/// probability during training.
inline constexpr double kVarianceFloor = 1e-6;

/// -sum_i p_i log(max(q_i, eps) / p_i), skipping p_i = 0.
double kl_loss(const SoftLabel& target, const SoftLabel& predicted, const LossConfig& cfg = {});

/// Gradient of kl_loss(target, softmax(logits)) with respect to the logits:
/// softmax(logits) - target.
std::vector<double> kl_grad_logits(const SoftLabel& target, const LevelLogits& logits);

/// Cross-entropy of a one-hot target against softmax(logits).
double cross_entropy_loss(std::size_t target_index, const LevelLogits& logits);

/// Gradient of cross_entropy_loss: softmax(logits) - onehot(target_index).
std::vector<double> cross_entropy_grad_logits(std::size_t target_index, const LevelLogits& logits);

/// Thurstone probability that A is better than B:
/// Phi((mu_A - mu_B) / sqrt(var_A + var_B)). With both variances zero
/// the result is 0, 0.5 or 1 by the sign of the mean difference.
double prob_better(const ScoreDistribution& a, const ScoreDistribution& b);

/// Training variant: the variance sum is floored at `variance_floor`.
double prob_better_floored(const ScoreDistribution& a, const ScoreDistribution& b,
                           double variance_floor = kVarianceFloor);

/// 1 - sqrt(p * q) - sqrt((1 - p) * (1 - q)).
double fidelity_loss(double p_gt, double p_pred);

struct FidelityGradient {
  double loss = 0.0;
  double p_pred = 0.5;
  std::vector<double> grad_a;
  std::vector<double> grad_b;
  // The predicted variance sum was below the floor.
  bool floored = false;
};

/// Fidelity loss of the predicted comparison against the annotated one,
/// with its gradient with respect to both logit vectors.
FidelityGradient fidelity_grad_logits(const std::pair<ScoreDistribution, ScoreDistribution>& gt_pair,
                                      const LevelLogits& logits_a, const LevelLogits& logits_b,
                                      const LevelScheme& scheme, double variance_floor = kVarianceFloor);

struct LabelItem {
  SoftLabel target;
  LevelLogits logits;
};

struct PairItem {
  ScoreDistribution gt_a;
  ScoreDistribution gt_b;
  LevelLogits logits_a;
  LevelLogits logits_b;
};

struct LossReport {
  double fidelity = 0.0;
  double kl = 0.0;
  // No response-template tokens exist here, so this is always 0.
  double ce = 0.0;
  double total = 0.0;
  std::size_t n_items = 0;
  std::size_t n_pairs = 0;
  std::vector<std::string> warnings;
};

/// mean fidelity + gamma * (ce + mean kl). Throws DomainError on an empty
/// batch; an empty pair set contributes 0 and records a warning.
LossReport combined_loss(std::span<const LabelItem> batch, std::span<const PairItem> pairs,
                         const LevelScheme& scheme, const LossConfig& cfg = {});

}  // namespace softscore
