#include "softscore/recovery.hpp"

#include <algorithm>
#include <cmath>

namespace softscore {

LevelLogits::LevelLogits(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw DomainError("LevelLogits: empty");
  for (double v : values_)
    if (!std::isfinite(v)) throw DomainError("LevelLogits: non-finite logit");
}

ScoreDistribution recover(const SoftLabel& label, const LevelScheme& scheme) {
  if (label.size() != scheme.size()) throw DomainError("recover: label and scheme sizes differ");
  const auto p = label.probs();
  double mu = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) mu += p[i] * scheme.center(i);
  double var = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double dev = scheme.center(i) - mu;
    var += p[i] * dev * dev;
  }
  return ScoreDistribution(mu, std::sqrt(std::max(var, 0.0)));
}

SoftLabel probabilities_from_logits(const LevelLogits& logits) {
  const auto l = logits.values();
  const double top = *std::max_element(l.begin(), l.end());
  std::vector<double> p(l.size());
  double total = 0.0;
  for (std::size_t i = 0; i < l.size(); ++i) {
    p[i] = std::exp(l[i] - top);
    total += p[i];
  }
  for (auto& v : p) v /= total;
  return SoftLabel(std::move(p));
}

ScoreDistribution predict_score(const LevelLogits& logits, const LevelScheme& scheme) {
  return recover(probabilities_from_logits(logits), scheme);
}

}  // namespace softscore
