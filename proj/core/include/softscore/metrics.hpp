#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "softscore/core.hpp"
#include "softscore/discretizer.hpp"

namespace softscore {

/// Sample Pearson correlation. Throws UndefinedCorrelationError if either
/// vector is constant, DomainError on length mismatch or fewer than 2.
double plcc(std::span<const double> xs, std::span<const double> ys);

/// Fractional ranks (1-based, ties share the average rank).
std::vector<double> fractional_ranks(std::span<const double> values);

/// Pearson correlation of fractional ranks.
double srcc(std::span<const double> xs, std::span<const double> ys);

struct ErrorPair {
  double l1;
  double rmse;
};

/// Mean absolute and root-mean-square error.
ErrorPair l1_rmse(std::span<const double> xs, std::span<const double> ys);

/// KL(p || q) = log(s_q / s_p) + (s_p^2 + (m_p - m_q)^2) / (2 s_q^2) - 1/2.
/// Throws UndefinedDivergenceError if either sigma is 0.
double gaussian_kl(const ScoreDistribution& p, const ScoreDistribution& q);

/// Jensen-Shannon divergence (natural log) by composite Simpson quadrature
/// over [min mu - 8 max sigma, max mu + 8 max sigma]. Uses 8192 intervals,
/// or more when the narrower density would otherwise be under-resolved.
/// Throws UndefinedDivergenceError if either sigma is 0.
double gaussian_js(const ScoreDistribution& p, const ScoreDistribution& q);

/// 2-Wasserstein distance between 1-D Gaussians.
double gaussian_wasserstein(const ScoreDistribution& p, const ScoreDistribution& q);

enum class LabelMethod { soft, onehot };

std::string_view to_string(LabelMethod method);
LabelMethod parse_label_method(std::string_view name);

struct PrecisionReport {
  LabelMethod method = LabelMethod::soft;
  double l1 = 0.0;
  double rmse = 0.0;
  // NaN (null in JSON) for fewer than two records or a constant column.
  double plcc = 0.0;
  double srcc = 0.0;
  // Soft labels only.
  std::optional<double> js;
  std::optional<double> wdist;
  double mean_alpha = 1.0;
  double mean_beta = 0.0;
  double clip_rate = 0.0;

  // Metadata.
  std::size_t n_records = 0;
  std::size_t n_interpolated = 0;
  std::size_t js_excluded = 0;
  ClipPolicy clip_policy = ClipPolicy::clip_renormalize;
  std::string wasserstein_order = "2";
  std::string js_log_base = "e";
};

/// Discretizes every record, recovers it, and compares against the
/// annotation. Alpha/beta means cover the records that took the
/// integration path; one-hot reports the identity (1, 0). Throws
/// DomainError on an empty list.
PrecisionReport precision_report(const std::vector<Record>& records, LabelMethod method,
                                 const LevelScheme& scheme, const DiscretizeConfig& cfg,
                                 unsigned threads = 1);

/// JSON object keyed by the PrecisionReport field names. js and wdist are
/// omitted when absent.
std::string to_json(const PrecisionReport& report);

}  // namespace softscore
