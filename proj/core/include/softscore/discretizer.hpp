#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "softscore/core.hpp"

namespace softscore {

enum class ClipPolicy {
  // Clip negatives to zero, then rescale to sum 1.
  clip_renormalize,
  // Clip negatives to zero and keep the remaining mass as is.
  clip_only,
};

std::string_view to_string(ClipPolicy policy);
/// Throws DomainError for unknown names.
ClipPolicy parse_clip_policy(std::string_view name);

struct DiscretizeConfig {
  // Variances at or below this use linear interpolation between centers.
  double small_variance_threshold = 0.04;
  // |mean_center * S - M| at or below this takes the degenerate solve.
  double degeneracy_epsilon = 1e-9;
  ClipPolicy clip_policy = ClipPolicy::clip_renormalize;

  /// Throws DomainError on non-positive thresholds.
  void validate() const;
};

/// Integral of the Gaussian density over each level bin. Requires sigma > 0.
RawSoftLabel raw_soft_label(const ScoreDistribution& dist, const LevelScheme& scheme);

/// Solves alpha * S + n * beta = 1 and alpha * M + n * cbar * beta = mu
/// for the post-adjustment. When the system is rank-deficient (symmetric
/// raw labels) returns alpha = 1, beta = (1 - S) / n flagged degenerate.
AdjustParams solve_adjustment(const RawSoftLabel& raw, const ScoreDistribution& dist,
                              const LevelScheme& scheme, const DiscretizeConfig& cfg);

struct AdjustedLabel {
  SoftLabel label;
  bool clipped = false;
};

/// q_i = alpha * raw_i + beta, negatives clipped per policy. Throws
/// DegenerateLabelError if every entry clips to zero.
AdjustedLabel apply_adjustment(const RawSoftLabel& raw, const AdjustParams& params,
                               const DiscretizeConfig& cfg);

struct InterpolatedLabel {
  SoftLabel label;
  // mu fell outside [first center, last center] and was clamped.
  bool clamped = false;
};

/// Point-mass limit: split unit mass between the two centers around mu,
/// linearly in distance.
InterpolatedLabel interpolate_small_variance(const ScoreDistribution& dist, const LevelScheme& scheme);

/// Everything the soft-label pipeline decided for one distribution.
struct LabelDetail {
  SoftLabel label;
  // Set only when the integration path ran.
  std::optional<AdjustParams> params;
  bool clipped = false;
  bool interpolated = false;
  bool clamped = false;
};

LabelDetail soft_label_detail(const ScoreDistribution& dist, const LevelScheme& scheme,
                              const DiscretizeConfig& cfg);

/// Soft label: interpolation for tiny variance, otherwise integrate,
/// post-adjust and clip.
SoftLabel soft_label(const ScoreDistribution& dist, const LevelScheme& scheme,
                     const DiscretizeConfig& cfg = {});

/// Index of the one-hot interval containing mu. The span of the centers is
/// cut into n equal intervals, half-open on the right except the last.
/// Throws RangeError outside [first center, last center].
std::size_t one_hot_index(double mu, const LevelScheme& scheme);

SoftLabel one_hot_label(const ScoreDistribution& dist, const LevelScheme& scheme);

}  // namespace softscore
