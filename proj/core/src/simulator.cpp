#include "softscore/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "softscore/csv.hpp"
#include "softscore/parallel.hpp"

namespace softscore {

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw DomainError("Rng::index: empty range");
  return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void CorpusConfig::validate() const {
  if (n_records < 1) throw DomainError("n_records must be >= 1");
  if (raters_per_image < 2) throw DomainError("raters_per_image must be >= 2");
  if (!(mu_lo >= 1.0 && mu_hi <= 5.0 && mu_lo <= mu_hi)) throw DomainError("mu range must lie within [1, 5]");
  if (!(sigma_lo >= 0.0 && sigma_lo <= sigma_hi)) throw DomainError("sigma range must satisfy 0 <= lo <= hi");
  if (!(transform_scale > 0.0) || !std::isfinite(transform_offset))
    throw DomainError("score transform needs a positive scale");
  if (dataset_tag.empty()) throw DomainError("dataset_tag must be nonempty");
}

std::vector<double> sample_annotations(const ScoreDistribution& truth, std::size_t k, Rng& rng) {
  std::vector<double> ratings(k);
  for (auto& r : ratings) r = truth.mu() + truth.sigma() * rng.normal();
  return ratings;
}

ScoreDistribution estimate_distribution(std::span<const double> ratings) {
  if (ratings.size() < 2) throw DomainError("estimate_distribution: need at least 2 ratings");
  const double n = static_cast<double>(ratings.size());
  double mean = 0.0;
  for (double r : ratings) mean += r;
  mean /= n;
  double ss = 0.0;
  for (double r : ratings) ss += (r - mean) * (r - mean);
  return ScoreDistribution(mean, std::sqrt(ss / (n - 1.0)));
}

std::vector<SyntheticRecord> synth_corpus_detail(const CorpusConfig& cfg, unsigned threads) {
  cfg.validate();
  const int width = static_cast<int>(std::to_string(cfg.n_records - 1).size());
  std::vector<std::optional<SyntheticRecord>> slots(cfg.n_records);
  parallel_for(cfg.n_records, threads, [&](std::size_t i) {
    Rng rng(derive_seed(cfg.seed, i));
    const double mu = rng.uniform(cfg.mu_lo, cfg.mu_hi);
    const double sigma = rng.uniform(cfg.sigma_lo, cfg.sigma_hi);
    const ScoreDistribution truth(mu, sigma);
    auto ratings = sample_annotations(truth, cfg.raters_per_image, rng);
    for (auto& r : ratings) {
      if (cfg.clamp) r = std::clamp(r, 1.0, 5.0);
      r = cfg.transform_scale * r + cfg.transform_offset;
    }
    const auto est = estimate_distribution(ratings);
    std::string index = std::to_string(i);
    index.insert(0, static_cast<std::size_t>(width) - index.size(), '0');
    slots[i] = SyntheticRecord{Record(cfg.dataset_tag + "_" + index, cfg.dataset_tag, est.mu(), est.sigma()),
                               truth};
  });
  std::vector<SyntheticRecord> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

std::vector<Record> synth_corpus(const CorpusConfig& cfg, unsigned threads) {
  std::vector<Record> out;
  for (auto& s : synth_corpus_detail(cfg, threads)) out.push_back(std::move(s.record));
  return out;
}

SourceRange nominal_range(const CorpusConfig& cfg) {
  return SourceRange(cfg.transform_scale * 1.0 + cfg.transform_offset,
                     cfg.transform_scale * 5.0 + cfg.transform_offset);
}

void write_raw(std::ostream& out, const std::vector<Record>& records) {
  out << "id,mos,std\n";
  for (const auto& r : records) out << r.id << ',' << csv::fixed(r.mu) << ',' << csv::fixed(r.dist().sigma()) << '\n';
}

}  // namespace softscore
