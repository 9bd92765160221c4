#include "softscore/losses.hpp"

#include <algorithm>
#include <cmath>

#include "softscore/parallel.hpp"

namespace softscore {

void LossConfig::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw DomainError("gamma must be finite and >= 0");
  if (!(epsilon_log > 0.0)) throw DomainError("epsilon_log must be > 0");
}

double kl_loss(const SoftLabel& target, const SoftLabel& predicted, const LossConfig& cfg) {
  if (target.size() != predicted.size()) throw DomainError("kl_loss: size mismatch");
  const auto p = target.probs();
  const auto q = predicted.probs();
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    total += p[i] * (std::log(p[i]) - std::log(std::max(q[i], cfg.epsilon_log)));
  }
  // Rounding can leave -1e-17 for identical inputs.
  return std::max(total, 0.0);
}

std::vector<double> kl_grad_logits(const SoftLabel& target, const LevelLogits& logits) {
  if (target.size() != logits.size()) throw DomainError("kl_grad_logits: size mismatch");
  const auto pred = probabilities_from_logits(logits);
  std::vector<double> grad(target.size());
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = pred[i] - target[i];
  return grad;
}

double cross_entropy_loss(std::size_t target_index, const LevelLogits& logits) {
  const auto l = logits.values();
  if (target_index >= l.size()) throw DomainError("cross_entropy_loss: index out of range");
  const double top = *std::max_element(l.begin(), l.end());
  double total = 0.0;
  for (double v : l) total += std::exp(v - top);
  return std::log(total) + top - l[target_index];
}

std::vector<double> cross_entropy_grad_logits(std::size_t target_index, const LevelLogits& logits) {
  if (target_index >= logits.size()) throw DomainError("cross_entropy_grad_logits: index out of range");
  const auto pred = probabilities_from_logits(logits);
  std::vector<double> grad(pred.probs().begin(), pred.probs().end());
  grad[target_index] -= 1.0;
  return grad;
}

namespace {

double comparison(double mean_diff, double var_sum) {
  if (var_sum <= 0.0) {
    if (mean_diff > 0.0) return 1.0;
    if (mean_diff < 0.0) return 0.0;
    return 0.5;
  }
  return gaussian_cdf(mean_diff / std::sqrt(var_sum));
}

}  // namespace

double prob_better(const ScoreDistribution& a, const ScoreDistribution& b) {
  return comparison(a.mu() - b.mu(), a.variance() + b.variance());
}

double prob_better_floored(const ScoreDistribution& a, const ScoreDistribution& b, double variance_floor) {
  return comparison(a.mu() - b.mu(), std::max(a.variance() + b.variance(), variance_floor));
}

double fidelity_loss(double p_gt, double p_pred) {
  if (!(p_gt >= 0.0 && p_gt <= 1.0) || !(p_pred >= 0.0 && p_pred <= 1.0))
    throw DomainError("fidelity_loss: probabilities must lie in [0, 1]");
  const double loss = 1.0 - std::sqrt(p_gt * p_pred) - std::sqrt((1.0 - p_gt) * (1.0 - p_pred));
  return std::clamp(loss, 0.0, 1.0);
}

namespace {

struct Moments {
  SoftLabel probs;
  double mean;
  double var;
};

Moments moments(const LevelLogits& logits, const LevelScheme& scheme) {
  auto p = probabilities_from_logits(logits);
  double mean = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) mean += p[i] * scheme.center(i);
  double var = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double dev = scheme.center(i) - mean;
    var += p[i] * dev * dev;
  }
  return {std::move(p), mean, var};
}

// dL/dp through d(mean)/dp_i = c_i and d(var)/dp_i = (c_i - mean)^2, then
// back through the softmax. The exact d(var)/dp_i differs by -mean^2, a
// constant the softmax Jacobian annihilates.
std::vector<double> backprop(const Moments& m, const LevelScheme& scheme, double d_mean, double d_var) {
  const std::size_t n = m.probs.size();
  std::vector<double> h(n);
  double avg = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dev = scheme.center(i) - m.mean;
    h[i] = d_mean * scheme.center(i) + d_var * dev * dev;
    avg += m.probs[i] * h[i];
  }
  std::vector<double> grad(n);
  for (std::size_t i = 0; i < n; ++i) grad[i] = m.probs[i] * (h[i] - avg);
  return grad;
}

}  // namespace

FidelityGradient fidelity_grad_logits(const std::pair<ScoreDistribution, ScoreDistribution>& gt_pair,
                                      const LevelLogits& logits_a, const LevelLogits& logits_b,
                                      const LevelScheme& scheme, double variance_floor) {
  if (logits_a.size() != scheme.size() || logits_b.size() != scheme.size())
    throw DomainError("fidelity_grad_logits: logits and scheme sizes differ");
  const double p_gt = prob_better(gt_pair.first, gt_pair.second);
  const auto a = moments(logits_a, scheme);
  const auto b = moments(logits_b, scheme);

  const double raw_var = a.var + b.var;
  const bool floored = raw_var < variance_floor;
  const double var = floored ? variance_floor : raw_var;
  const double scale = std::sqrt(var);
  const double z = (a.mean - b.mean) / scale;
  const double p_hat = gaussian_cdf(z);
  const double q_hat = gaussian_cdf(-z);
  const double density = gaussian_pdf(z);

  FidelityGradient out;
  out.p_pred = p_hat;
  out.floored = floored;
  out.loss = std::clamp(1.0 - std::sqrt(p_gt * p_hat) - std::sqrt((1.0 - p_gt) * q_hat), 0.0, 1.0);

  // dL/dz = density * dL/dp_hat, with density / sqrt(p_hat) -> 0 as
  // p_hat -> 0 (and likewise for q_hat).
  double d_z = 0.0;
  if (p_hat > 0.0) d_z -= 0.5 * std::sqrt(p_gt) * density / std::sqrt(p_hat);
  if (q_hat > 0.0) d_z += 0.5 * std::sqrt(1.0 - p_gt) * density / std::sqrt(q_hat);

  const double d_mean = d_z / scale;
  const double d_var = floored ? 0.0 : -d_z * z / (2.0 * var);
  out.grad_a = backprop(a, scheme, d_mean, d_var);
  out.grad_b = backprop(b, scheme, -d_mean, d_var);
  return out;
}

LossReport combined_loss(std::span<const LabelItem> batch, std::span<const PairItem> pairs,
                         const LevelScheme& scheme, const LossConfig& cfg) {
  if (batch.empty()) throw DomainError("combined_loss: empty batch");
  LossReport report;
  report.n_items = batch.size();
  report.n_pairs = pairs.size();

  std::vector<double> kls(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i)
    kls[i] = kl_loss(batch[i].target, probabilities_from_logits(batch[i].logits), cfg);
  report.kl = tree_mean(kls);

  if (pairs.empty()) {
    report.warnings.emplace_back("no comparison pairs; fidelity term is 0");
  } else {
    std::vector<double> fids(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto& pr = pairs[i];
      const double p_gt = prob_better(pr.gt_a, pr.gt_b);
      const double p_pred = prob_better(predict_score(pr.logits_a, scheme), predict_score(pr.logits_b, scheme));
      fids[i] = fidelity_loss(p_gt, p_pred);
    }
    report.fidelity = tree_mean(fids);
  }
  report.ce = 0.0;
  report.total = report.fidelity + cfg.gamma * (report.ce + report.kl);
  return report;
}

}  // namespace softscore
