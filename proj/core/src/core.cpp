#include "softscore/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace softscore {

double gaussian_cdf(double z) {
  if (!std::isfinite(z)) throw DomainError("gaussian_cdf: non-finite argument");
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double gaussian_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

ScoreDistribution::ScoreDistribution(double mu, double sigma) : mu_(mu), sigma_(sigma) {
  if (!std::isfinite(mu) || !std::isfinite(sigma))
    throw DomainError("ScoreDistribution: non-finite parameter");
  if (sigma < 0.0) throw DomainError("ScoreDistribution: negative sigma");
}

LevelScheme::LevelScheme(std::vector<std::string> names, std::vector<double> centers)
    : names_(std::move(names)), centers_(std::move(centers)) {
  if (names_.size() != centers_.size())
    throw DomainError("LevelScheme: names and centers differ in length");
  if (centers_.size() < 2) throw DomainError("LevelScheme: need at least two levels");
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty() || !seen.insert(n).second)
      throw DomainError("LevelScheme: level names must be unique and nonempty");
  }
  for (double c : centers_)
    if (!std::isfinite(c)) throw DomainError("LevelScheme: non-finite center");

  width_ = centers_[1] - centers_[0];
  if (width_ <= 0.0) throw DomainError("LevelScheme: centers must be strictly increasing");
  for (std::size_t i = 1; i < centers_.size(); ++i) {
    const double step = centers_[i] - centers_[i - 1];
    if (std::abs(step - width_) > 1e-9 * width_)
      throw DomainError("LevelScheme: centers must be equally spaced");
  }
  double total = 0.0;
  for (double c : centers_) total += c;
  mean_center_ = total / static_cast<double>(centers_.size());
}

LevelScheme LevelScheme::default5() {
  return LevelScheme({"bad", "poor", "fair", "good", "excellent"}, {1.0, 2.0, 3.0, 4.0, 5.0});
}

std::vector<double> LevelScheme::boundaries() const {
  std::vector<double> out;
  out.reserve(centers_.size() + 1);
  for (double c : centers_) out.push_back(c - width_ / 2.0);
  out.push_back(centers_.back() + width_ / 2.0);
  return out;
}

namespace {

void check_entries(std::span<const double> probs, const char* what, bool bounded = true) {
  if (probs.empty()) throw DomainError(std::string(what) + ": empty probability vector");
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0 || (bounded && p > 1.0))
      throw DomainError(std::string(what) + ": entry outside [0, 1]");
  }
}

double plain_sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

SoftLabel::SoftLabel(std::vector<double> probs) : SoftLabel(std::move(probs), true) {}

SoftLabel::SoftLabel(std::vector<double> probs, bool normalized)
    : probs_(std::move(probs)), normalized_(normalized) {
  check_entries(probs_, "SoftLabel", normalized_);
  if (normalized_ && std::abs(plain_sum(probs_) - 1.0) > kSumTolerance)
    throw DomainError("SoftLabel: entries do not sum to 1");
}

SoftLabel SoftLabel::unnormalized(std::vector<double> probs) {
  return SoftLabel(std::move(probs), false);
}

SoftLabel SoftLabel::point_mass(std::size_t levels, std::size_t index) {
  if (index >= levels) throw DomainError("SoftLabel::point_mass: index out of range");
  std::vector<double> p(levels, 0.0);
  p[index] = 1.0;
  return SoftLabel(std::move(p));
}

double SoftLabel::sum() const { return plain_sum(probs_); }

std::size_t SoftLabel::argmax() const {
  return static_cast<std::size_t>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
}

RawSoftLabel::RawSoftLabel(std::vector<double> probs) : probs_(std::move(probs)) {
  check_entries(probs_, "RawSoftLabel");
  if (plain_sum(probs_) > 1.0 + 1e-9) throw DomainError("RawSoftLabel: mass exceeds 1");
}

double RawSoftLabel::sum() const { return plain_sum(probs_); }

Record::Record(std::string id_, std::string dataset_, double mu_, std::optional<double> sigma_)
    : id(std::move(id_)), dataset(std::move(dataset_)), mu(mu_), sigma(sigma_) {
  if (id.empty()) throw DomainError("Record: empty id");
  if (dataset.empty()) throw DomainError("Record: empty dataset tag");
}

ScoreDistribution Record::dist() const {
  if (!sigma) throw MissingSigmaError("record '" + id + "' has no sigma");
  return ScoreDistribution(mu, *sigma);
}

}  // namespace softscore
