#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "softscore/core.hpp"
#include "softscore/ingest.hpp"

namespace softscore {

/// Seeded generator. Draws are built from raw mt19937_64 output so they do
/// not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform index in [0, n).
  std::size_t index(std::size_t n);
  /// Standard normal (Box-Muller).
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// splitmix64 mix of a seed and a stream index, for per-record streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

struct CorpusConfig {
  std::size_t n_records = 500;
  double mu_lo = 1.0;
  double mu_hi = 5.0;
  double sigma_lo = 0.5;
  double sigma_hi = 1.0;
  std::size_t raters_per_image = 50;
  std::uint64_t seed = 0;
  std::string dataset_tag = "synthetic";
  // raw = scale * normalized + offset
  double transform_scale = 1.0;
  double transform_offset = 0.0;
  // Clamp individual ratings to [1, 5] before the transform.
  bool clamp = false;

  void validate() const;
};

/// k independent draws from N(mu, sigma^2).
std::vector<double> sample_annotations(const ScoreDistribution& truth, std::size_t k, Rng& rng);

/// Sample mean and unbiased (k - 1) standard deviation. Throws DomainError
/// for fewer than two ratings.
ScoreDistribution estimate_distribution(std::span<const double> ratings);

/// A synthetic record plus the ground truth it was sampled from.
struct SyntheticRecord {
  Record record;         // raw units, estimated from ratings
  ScoreDistribution truth;  // normalized units
};

/// Draws true mu and sigma uniformly, samples ratings, summarizes them and
/// maps them to raw units. Record i depends only on (seed, i).
std::vector<SyntheticRecord> synth_corpus_detail(const CorpusConfig& cfg, unsigned threads = 1);

std::vector<Record> synth_corpus(const CorpusConfig& cfg, unsigned threads = 1);

/// The transform applied to the normalized range [1, 5].
SourceRange nominal_range(const CorpusConfig& cfg);

/// Writes records in the `id,mos,std` ingest format with 6 decimals.
void write_raw(std::ostream& out, const std::vector<Record>& records);

}  // namespace softscore
