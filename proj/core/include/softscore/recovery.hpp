#pragma once

#include <span>
#include <vector>

#include "softscore/core.hpp"

namespace softscore {

/// Unnormalized per-level scores from a model head. Entries are finite.
class LevelLogits {
 public:
  explicit LevelLogits(std::vector<double> values);

  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_.at(i); }
  std::size_t size() const noexcept { return values_.size(); }

 private:
  std::vector<double> values_;
};

/// Mean and standard deviation of the discrete distribution P(c_i) = p_i.
ScoreDistribution recover(const SoftLabel& label, const LevelScheme& scheme);

/// Closed-set softmax with max subtraction.
SoftLabel probabilities_from_logits(const LevelLogits& logits);

/// recover(probabilities_from_logits(logits)).
ScoreDistribution predict_score(const LevelLogits& logits, const LevelScheme& scheme);

}  // namespace softscore
