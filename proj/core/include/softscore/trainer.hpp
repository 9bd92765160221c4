#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "softscore/core.hpp"
#include "softscore/discretizer.hpp"
#include "softscore/losses.hpp"
#include "softscore/recovery.hpp"

namespace softscore {

/// A record plus the fixed-length feature vector standing in for an image
/// embedding.
struct FeatureRecord {
  Record record;
  std::vector<double> features;
};

struct FeatureDataset {
  std::string tag;
  std::vector<FeatureRecord> records;
};

/// Linear level head: logits = weights * features + bias, weights stored
/// row-major (levels x dims).
class LinearHead {
 public:
  LinearHead(std::size_t levels, std::size_t dims);
  LinearHead(std::size_t levels, std::size_t dims, std::vector<double> weights, std::vector<double> bias);

  std::size_t levels() const noexcept { return levels_; }
  std::size_t dims() const noexcept { return dims_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::span<const double> bias() const noexcept { return bias_; }
  std::span<double> weights() noexcept { return weights_; }
  std::span<double> bias() noexcept { return bias_; }
  double weight(std::size_t level, std::size_t dim) const { return weights_.at(level * dims_ + dim); }

  friend bool operator==(const LinearHead&, const LinearHead&) = default;

 private:
  std::size_t levels_;
  std::size_t dims_;
  std::vector<double> weights_;
  std::vector<double> bias_;
};

/// Throws DomainError on a dimension mismatch, NumericError if a logit
/// overflows.
LevelLogits forward(const LinearHead& head, std::span<const double> features);

/// Weights uniform in [-1/sqrt(dims), 1/sqrt(dims)], zero bias.
LinearHead initialize_head(std::size_t dims, std::size_t levels, std::uint64_t seed);

enum class LabelMode { soft_kl, onehot_ce };

std::string_view to_string(LabelMode mode);
LabelMode parse_label_mode(std::string_view name);

struct TrainConfig {
  LabelMode label_mode = LabelMode::soft_kl;
  bool use_fidelity = false;
  double gamma = 0.05;
  double learning_rate = 0.1;
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  // 0 means "same as batch_size".
  std::size_t pairs_per_batch = 0;
  std::uint64_t seed = 0;
  double validation_fraction = 0.2;
  // Per-epoch validation JS is the slowest part of an epoch.
  bool history_js = true;
  unsigned threads = 1;

  void validate() const;
};

/// One training example with its label already derived.
struct TrainItem {
  std::span<const double> features;
  SoftLabel target;
  std::size_t target_index = 0;  // one-hot level
  ScoreDistribution annotation;
  std::size_t dataset = 0;
};

struct BatchGradient {
  double label_loss = 0.0;
  double fidelity_loss = 0.0;
  double total = 0.0;
  LinearHead grad;
  bool floored = false;
};

/// Objective over one batch and its comparison pairs (indices into the
/// batch): [fidelity mean] + weight * label mean, where weight is gamma when
/// fidelity is on and 1 otherwise. Returns its gradient for every head
/// parameter. Pairs are ignored unless cfg.use_fidelity.
BatchGradient batch_gradient(const LinearHead& head, std::span<const TrainItem> batch,
                             std::span<const std::pair<std::size_t, std::size_t>> pairs,
                             const TrainConfig& cfg, const LevelScheme& scheme,
                             const LossConfig& loss_cfg);

struct EvalMetrics {
  double plcc = 0.0;
  double srcc = 0.0;
  // Mean JS between predicted and annotated Gaussians; absent when no
  // record has a positive annotated sigma.
  std::optional<double> mean_js;
  std::size_t js_excluded = 0;
  std::size_t n = 0;
};

/// Predicts every record and correlates predicted means with annotated
/// ones. Throws UndefinedCorrelationError for constant predictions.
EvalMetrics evaluate(const LinearHead& head, std::span<const FeatureRecord> dataset,
                     const LevelScheme& scheme);

struct EpochStats {
  std::size_t epoch = 0;
  double label_loss = 0.0;
  double fidelity_loss = 0.0;
  double total_loss = 0.0;
  // Means over datasets; NaN when a correlation is undefined.
  double val_plcc = 0.0;
  double val_srcc = 0.0;
  double val_js = 0.0;
};

struct DatasetSplit {
  std::string tag;
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

struct TrainResult {
  LinearHead head;
  std::vector<EpochStats> history;
  std::vector<DatasetSplit> splits;
};

/// Seeded 80/20 (by default) shuffle split of one dataset.
DatasetSplit split_dataset(const FeatureDataset& dataset, double validation_fraction, std::uint64_t seed);

/// Mini-batch gradient descent. Throws NumericError on a non-finite loss.
TrainResult train(const std::vector<FeatureDataset>& datasets, const TrainConfig& cfg,
                  const LevelScheme& scheme, const LossConfig& loss_cfg = {},
                  const DiscretizeConfig& disc_cfg = {});

/// Validation records of one dataset per the split.
std::vector<FeatureRecord> validation_records(const FeatureDataset& dataset, const DatasetSplit& split);

/// Synthetic dataset: latent quality q uniform in [latent_lo, latent_hi],
/// raw score = raw_scale * q + raw_offset, normalized with the dataset's
/// own range (the raw images of norm_lo and norm_hi map to 1 and 5).
/// Features are ((q - 3) / 2, noise...) with noise ~ N(noise_shift, 1).
struct FeatureWorldConfig {
  std::string tag = "synthetic";
  std::size_t n_records = 500;
  double latent_lo = 1.0;
  double latent_hi = 5.0;
  std::optional<double> norm_lo;  // defaults to latent_lo
  std::optional<double> norm_hi;  // defaults to latent_hi
  double raw_scale = 1.0;
  double raw_offset = 0.0;
  double sigma_lo = 0.5;  // normalized units
  double sigma_hi = 1.0;
  std::size_t noise_dims = 2;
  double noise_shift = 0.0;
  std::uint64_t seed = 0;
};

/// The dataset plus each record's latent quality.
struct FeatureWorld {
  FeatureDataset dataset;
  std::vector<double> latent;
};

FeatureWorld synth_feature_world(const FeatureWorldConfig& cfg);

/// `id,mu,sigma,f0,...` in normalized units, 6 decimals.
void write_feature_dataset(std::ostream& out, const FeatureDataset& dataset);
FeatureDataset read_feature_dataset(std::istream& in, const std::string& tag);
/// Loads every *.csv in `dir` (sorted by name); the file stem is the tag.
std::vector<FeatureDataset> load_feature_datasets(const std::filesystem::path& dir);

/// JSON with weights row-major; round-trips exactly.
std::string head_to_json(const LinearHead& head, const LevelScheme& scheme);
LinearHead head_from_json(std::string_view json);

/// `epoch,label_loss,fidelity_loss,total_loss,val_plcc,val_srcc,val_js`.
void write_history(std::ostream& out, const std::vector<EpochStats>& history);

}  // namespace softscore
