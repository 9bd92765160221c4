#include "softscore/discretizer.hpp"

#include <algorithm>
#include <cmath>

namespace softscore {

std::string_view to_string(ClipPolicy policy) {
  switch (policy) {
    case ClipPolicy::clip_renormalize:
      return "clip_renormalize";
    case ClipPolicy::clip_only:
      return "clip_only";
  }
  return "clip_renormalize";
}

ClipPolicy parse_clip_policy(std::string_view name) {
  if (name == "clip_renormalize") return ClipPolicy::clip_renormalize;
  if (name == "clip_only") return ClipPolicy::clip_only;
  throw DomainError("unknown clip policy '" + std::string(name) + "'");
}

void DiscretizeConfig::validate() const {
  if (!(small_variance_threshold > 0.0)) throw DomainError("small_variance_threshold must be > 0");
  if (!(degeneracy_epsilon > 0.0)) throw DomainError("degeneracy_epsilon must be > 0");
}

namespace {

// Mass of N(0,1) between a and b (a <= b), taken from the tail nearer to
// zero so neither side cancels catastrophically.
double standard_mass(double a, double b) {
  if (a >= 0.0) return gaussian_cdf(-a) - gaussian_cdf(-b);
  return gaussian_cdf(b) - gaussian_cdf(a);
}

}  // namespace

RawSoftLabel raw_soft_label(const ScoreDistribution& dist, const LevelScheme& scheme) {
  if (!(dist.sigma() > 0.0)) throw DomainError("raw_soft_label: sigma must be positive");
  const double half = scheme.width() / 2.0;
  std::vector<double> probs(scheme.size());
  for (std::size_t i = 0; i < scheme.size(); ++i) {
    const double lo = (scheme.center(i) - half - dist.mu()) / dist.sigma();
    const double hi = (scheme.center(i) + half - dist.mu()) / dist.sigma();
    probs[i] = std::clamp(standard_mass(lo, hi), 0.0, 1.0);
  }
  return RawSoftLabel(std::move(probs));
}

AdjustParams solve_adjustment(const RawSoftLabel& raw, const ScoreDistribution& dist,
                              const LevelScheme& scheme, const DiscretizeConfig& cfg) {
  const auto p = raw.probs();
  const double n = static_cast<double>(scheme.size());
  double mass = 0.0;
  double moment = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    mass += p[i];
    moment += p[i] * scheme.center(i);
  }
  const double cbar = scheme.mean_center();
  const double det = cbar * mass - moment;
  if (std::abs(det) <= cfg.degeneracy_epsilon) return {1.0, (1.0 - mass) / n, true};
  const double alpha = (cbar - dist.mu()) / det;
  return {alpha, (1.0 - alpha * mass) / n, false};
}

AdjustedLabel apply_adjustment(const RawSoftLabel& raw, const AdjustParams& params,
                               const DiscretizeConfig& cfg) {
  const auto p = raw.probs();
  std::vector<double> q(p.size());
  bool clipped = false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    q[i] = params.alpha * p[i] + params.beta;
    if (q[i] < 0.0) {
      q[i] = 0.0;
      clipped = true;
    }
  }
  double total = 0.0;
  for (double v : q) total += v;
  if (!(total > 0.0)) throw DegenerateLabelError("adjusted label clipped to all zeros");

  if (cfg.clip_policy == ClipPolicy::clip_only) {
    return {SoftLabel::unnormalized(std::move(q)), clipped};
  }
  // Without clipping the constraints already fix the sum; rescale anyway
  // to absorb rounding.
  for (auto& v : q) v = std::min(v / total, 1.0);
  return {SoftLabel(std::move(q)), clipped};
}

InterpolatedLabel interpolate_small_variance(const ScoreDistribution& dist, const LevelScheme& scheme) {
  const std::size_t n = scheme.size();
  const double d = scheme.width();
  double mu = dist.mu();
  bool clamped = false;
  if (mu < scheme.first_center() || mu > scheme.last_center()) {
    mu = std::clamp(mu, scheme.first_center(), scheme.last_center());
    clamped = true;
  }
  // j such that c_j < mu <= c_{j+1}; mu on the first center uses j = 0.
  const double t = (mu - scheme.first_center()) / d;
  const auto j = static_cast<std::size_t>(
      std::clamp(std::ceil(t) - 1.0, 0.0, static_cast<double>(n - 2)));
  std::vector<double> probs(n, 0.0);
  probs[j] = std::clamp((scheme.center(j + 1) - mu) / d, 0.0, 1.0);
  probs[j + 1] = std::clamp((mu - scheme.center(j)) / d, 0.0, 1.0);
  return {SoftLabel(std::move(probs)), clamped};
}

LabelDetail soft_label_detail(const ScoreDistribution& dist, const LevelScheme& scheme,
                              const DiscretizeConfig& cfg) {
  // Compared on sigma so that sigma = 0.2 meets a 0.04 threshold despite
  // 0.2 * 0.2 rounding above 0.04.
  if (dist.sigma() <= std::sqrt(cfg.small_variance_threshold)) {
    auto interp = interpolate_small_variance(dist, scheme);
    return {std::move(interp.label), std::nullopt, false, true, interp.clamped};
  }
  const auto raw = raw_soft_label(dist, scheme);
  const auto params = solve_adjustment(raw, dist, scheme, cfg);
  auto adjusted = apply_adjustment(raw, params, cfg);
  return {std::move(adjusted.label), params, adjusted.clipped, false, false};
}

SoftLabel soft_label(const ScoreDistribution& dist, const LevelScheme& scheme, const DiscretizeConfig& cfg) {
  return soft_label_detail(dist, scheme, cfg).label;
}

std::size_t one_hot_index(double mu, const LevelScheme& scheme) {
  const double lo = scheme.first_center();
  const double hi = scheme.last_center();
  if (!(mu >= lo && mu <= hi)) {
    throw RangeError("one-hot: score " + std::to_string(mu) + " outside [" + std::to_string(lo) +
                     ", " + std::to_string(hi) + "]");
  }
  const std::size_t n = scheme.size();
  const double span = hi - lo;
  // A score within rounding of an interval edge belongs to the upper
  // interval.
  const double tie = 1e-12 * span;
  std::size_t index = 0;
  for (std::size_t k = 1; k < n; ++k) {
    const double edge = lo + (span * static_cast<double>(k)) / static_cast<double>(n);
    if (mu >= edge - tie) index = k;
  }
  return index;
}

SoftLabel one_hot_label(const ScoreDistribution& dist, const LevelScheme& scheme) {
  return SoftLabel::point_mass(scheme.size(), one_hot_index(dist.mu(), scheme));
}

}  // namespace softscore
