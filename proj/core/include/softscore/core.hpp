#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "softscore/errors.hpp"

namespace softscore {

/// Standard normal CDF via erfc. Absolute error is at the level of the
/// platform erfc (well under 1e-12). Throws DomainError on non-finite z.
double gaussian_cdf(double z);

/// Standard normal density.
double gaussian_pdf(double z);

/// Gaussian over quality scores, N(mu, sigma^2). sigma is a standard
/// deviation, never a variance.
class ScoreDistribution {
 public:
  ScoreDistribution(double mu, double sigma);

  double mu() const noexcept { return mu_; }
  double sigma() const noexcept { return sigma_; }
  double variance() const noexcept { return sigma_ * sigma_; }

  friend bool operator==(const ScoreDistribution&, const ScoreDistribution&) = default;

 private:
  double mu_;
  double sigma_;
};

/// Ordered rating ladder with equally spaced centers.
class LevelScheme {
 public:
  LevelScheme(std::vector<std::string> names, std::vector<double> centers);

  /// bad/poor/fair/good/excellent at centers 1..5, width 1.
  static LevelScheme default5();

  std::size_t size() const noexcept { return centers_.size(); }
  std::span<const std::string> names() const noexcept { return names_; }
  std::span<const double> centers() const noexcept { return centers_; }
  double center(std::size_t i) const { return centers_.at(i); }
  double width() const noexcept { return width_; }
  double mean_center() const noexcept { return mean_center_; }
  double first_center() const noexcept { return centers_.front(); }
  double last_center() const noexcept { return centers_.back(); }

  /// Bin edges c_0 - d/2, ..., c_{n-1} + d/2 (n + 1 values).
  std::vector<double> boundaries() const;

  friend bool operator==(const LevelScheme&, const LevelScheme&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<double> centers_;
  double width_ = 0.0;
  double mean_center_ = 0.0;
};

/// Probability vector over levels. Entries lie in [0, 1]; they sum to 1
/// within 1e-9 unless the label was built with `unnormalized`.
class SoftLabel {
 public:
  static constexpr double kSumTolerance = 1e-9;

  explicit SoftLabel(std::vector<double> probs);

  /// Clip-only labels from the precision study keep their post-clip mass,
  /// so entries are only required to be finite and non-negative.
  static SoftLabel unnormalized(std::vector<double> probs);

  /// All mass on level `index`.
  static SoftLabel point_mass(std::size_t levels, std::size_t index);

  std::span<const double> probs() const noexcept { return probs_; }
  double operator[](std::size_t i) const { return probs_.at(i); }
  std::size_t size() const noexcept { return probs_.size(); }
  bool normalized() const noexcept { return normalized_; }
  double sum() const;
  /// Index of the largest entry (first on ties).
  std::size_t argmax() const;

 private:
  SoftLabel(std::vector<double> probs, bool normalized);

  std::vector<double> probs_;
  bool normalized_ = true;
};

/// Bin integrals before post-adjustment. Truncation can only remove mass,
/// so the sum is at most 1.
class RawSoftLabel {
 public:
  explicit RawSoftLabel(std::vector<double> probs);

  std::span<const double> probs() const noexcept { return probs_; }
  std::size_t size() const noexcept { return probs_.size(); }
  double sum() const;

 private:
  std::vector<double> probs_;
};

/// Linear post-adjustment p = alpha * raw + beta.
struct AdjustParams {
  double alpha = 1.0;
  double beta = 0.0;
  // The mean constraint was rank-deficient; alpha fixed to 1.
  bool degenerate = false;
};

/// One image's annotation. sigma is absent until annotated or assigned.
struct Record {
  std::string id;
  std::string dataset;
  double mu = 0.0;
  std::optional<double> sigma;

  Record() = default;
  Record(std::string id, std::string dataset, double mu, std::optional<double> sigma);

  bool has_sigma() const noexcept { return sigma.has_value(); }
  /// Throws MissingSigmaError when sigma is absent.
  ScoreDistribution dist() const;
};

}  // namespace softscore
