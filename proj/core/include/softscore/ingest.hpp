#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "softscore/core.hpp"

namespace softscore {

/// Raw score range of a dataset, used for normalization to [1, 5].
struct SourceRange {
  double min_score;
  double max_score;

  /// Throws RangeError unless max_score > min_score.
  SourceRange(double min_score, double max_score);
  double span() const noexcept { return max_score - min_score; }
};

inline constexpr double kDefaultPseudoSigmaRatio = 0.20;

/// Reads `id,mos,std` (has_sigma) or `id,mos` records. Errors name the
/// 1-based data row. Records without a sigma column carry an absent sigma.
std::vector<Record> read_records(std::istream& in, bool has_sigma, const std::string& dataset);

/// File variant of read_records. The dataset tag defaults to the file stem.
std::vector<Record> load_records(const std::filesystem::path& path, bool has_sigma,
                                 const std::string& dataset = {});

/// Smallest and largest mu in the list.
SourceRange range_of(const std::vector<Record>& records);

/// Affine map of raw scores onto [1, 5]; sigma scales by 4 / span.
std::vector<Record> normalize(const std::vector<Record>& records, const SourceRange& range);

/// Inverse of normalize.
std::vector<Record> denormalize(const std::vector<Record>& records, const SourceRange& range);

/// Gives every record without sigma a pseudo sigma of ratio * span, in raw
/// units. Records that already have sigma are left alone.
std::vector<Record> assign_pseudo_sigma(const std::vector<Record>& records, double ratio,
                                        const SourceRange& range);

/// Full ingestion: pseudo sigma (raw units) then normalization. The
/// explicit range wins over the one computed from the data.
struct IngestOptions {
  bool has_sigma = true;
  std::optional<SourceRange> range;
  double pseudo_sigma_ratio = kDefaultPseudoSigmaRatio;
  std::string dataset;
};

std::vector<Record> ingest(const std::filesystem::path& path, const IngestOptions& options);

/// Writes `id,dataset,mu,sigma` with 6 decimals.
void write_normalized(std::ostream& out, const std::vector<Record>& records);

/// Reads the normalized format written by write_normalized.
std::vector<Record> read_normalized(std::istream& in);

/// Loads either format, telling them apart by header. Raw files go through
/// `ingest` with the given options.
std::vector<Record> load_any(const std::filesystem::path& path, const IngestOptions& options);

}  // namespace softscore
