#include "softscore/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <unordered_set>

#include "softscore/csv.hpp"

namespace softscore {

SourceRange::SourceRange(double min_score_, double max_score_)
    : min_score(min_score_), max_score(max_score_) {
  if (!std::isfinite(min_score) || !std::isfinite(max_score))
    throw RangeError("source range: non-finite bound");
  if (!(max_score > min_score))
    throw RangeError("source range: degenerate range (max must exceed min)");
}

namespace {

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open input file '" + path.string() + "'");
  return in;
}

std::string default_tag(const std::string& dataset, const std::filesystem::path& path) {
  if (!dataset.empty()) return dataset;
  auto stem = path.stem().string();
  return stem.empty() ? "default" : stem;
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t") == std::string::npos;
}

}  // namespace

std::vector<Record> read_records(std::istream& in, bool has_sigma, const std::string& dataset) {
  const std::vector<std::string> expected =
      has_sigma ? std::vector<std::string>{"id", "mos", "std"} : std::vector<std::string>{"id", "mos"};
  std::string line;
  if (!csv::next_line(in, line)) throw ParseError("missing CSV header");
  if (csv::split_line(line) != expected)
    throw ParseError("CSV header must be '" + csv::join(expected) + "', got '" + line + "'");

  std::vector<Record> records;
  std::unordered_set<std::string> ids;
  std::size_t row = 0;
  while (csv::next_line(in, line)) {
    ++row;
    if (blank(line)) continue;
    const auto fields = csv::split_line(line);
    if (fields.size() != expected.size()) {
      throw ParseError("expected " + std::to_string(expected.size()) + " fields, got " +
                           std::to_string(fields.size()),
                       row);
    }
    if (fields[0].empty()) throw ParseError("empty id", row);
    if (!ids.insert(fields[0]).second) throw ParseError("duplicate id '" + fields[0] + "'", row);
    const double mos = csv::parse_real(fields[1], row, "mos");
    std::optional<double> sigma;
    if (has_sigma) {
      sigma = csv::parse_real(fields[2], row, "std");
      if (*sigma < 0.0) throw ParseError("negative std", row);
    }
    records.emplace_back(fields[0], dataset, mos, sigma);
  }
  return records;
}

std::vector<Record> load_records(const std::filesystem::path& path, bool has_sigma,
                                 const std::string& dataset) {
  auto in = open_or_throw(path);
  try {
    return read_records(in, has_sigma, default_tag(dataset, path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

SourceRange range_of(const std::vector<Record>& records) {
  if (records.empty()) throw RangeError("cannot compute a score range from no records");
  const auto [lo, hi] = std::minmax_element(records.begin(), records.end(),
                                            [](const Record& a, const Record& b) { return a.mu < b.mu; });
  return SourceRange(lo->mu, hi->mu);
}

std::vector<Record> normalize(const std::vector<Record>& records, const SourceRange& range) {
  const double scale = 4.0 / range.span();
  std::vector<Record> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (r.mu < range.min_score || r.mu > range.max_score) {
      throw RangeError("record '" + r.id + "': mos " + std::to_string(r.mu) + " outside [" +
                       std::to_string(range.min_score) + ", " + std::to_string(range.max_score) + "]");
    }
    Record n = r;
    n.mu = 1.0 + (r.mu - range.min_score) * scale;
    if (r.sigma) n.sigma = *r.sigma * scale;
    out.push_back(std::move(n));
  }
  return out;
}

std::vector<Record> denormalize(const std::vector<Record>& records, const SourceRange& range) {
  const double scale = range.span() / 4.0;
  std::vector<Record> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    Record raw = r;
    raw.mu = range.min_score + (r.mu - 1.0) * scale;
    if (r.sigma) raw.sigma = *r.sigma * scale;
    out.push_back(std::move(raw));
  }
  return out;
}

std::vector<Record> assign_pseudo_sigma(const std::vector<Record>& records, double ratio,
                                        const SourceRange& range) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw DomainError("pseudo sigma ratio must lie in (0, 1)");
  const double pseudo = ratio * range.span();
  std::vector<Record> out = records;
  for (auto& r : out)
    if (!r.sigma) r.sigma = pseudo;
  return out;
}

std::vector<Record> ingest(const std::filesystem::path& path, const IngestOptions& options) {
  auto raw = load_records(path, options.has_sigma, options.dataset);
  if (raw.empty()) return raw;
  const SourceRange range = options.range ? *options.range : range_of(raw);
  if (!options.has_sigma) raw = assign_pseudo_sigma(raw, options.pseudo_sigma_ratio, range);
  return normalize(raw, range);
}

void write_normalized(std::ostream& out, const std::vector<Record>& records) {
  out << "id,dataset,mu,sigma\n";
  for (const auto& r : records) {
    out << r.id << ',' << r.dataset << ',' << csv::fixed(r.mu) << ','
        << (r.sigma ? csv::fixed(*r.sigma) : std::string()) << '\n';
  }
}

std::vector<Record> read_normalized(std::istream& in) {
  std::string line;
  if (!csv::next_line(in, line)) throw ParseError("missing CSV header");
  if (csv::split_line(line) != std::vector<std::string>{"id", "dataset", "mu", "sigma"})
    throw ParseError("CSV header must be 'id,dataset,mu,sigma', got '" + line + "'");
  std::vector<Record> records;
  std::unordered_set<std::string> ids;
  std::size_t row = 0;
  while (csv::next_line(in, line)) {
    ++row;
    if (blank(line)) continue;
    const auto f = csv::split_line(line);
    if (f.size() != 4) throw ParseError("expected 4 fields, got " + std::to_string(f.size()), row);
    if (f[0].empty() || f[1].empty()) throw ParseError("empty id or dataset", row);
    if (!ids.insert(f[0]).second) throw ParseError("duplicate id '" + f[0] + "'", row);
    std::optional<double> sigma;
    if (!f[3].empty()) sigma = csv::parse_real(f[3], row, "sigma");
    records.emplace_back(f[0], f[1], csv::parse_real(f[2], row, "mu"), sigma);
  }
  return records;
}

std::vector<Record> load_any(const std::filesystem::path& path, const IngestOptions& options) {
  std::string header;
  {
    auto in = open_or_throw(path);
    if (!csv::next_line(in, header)) throw ParseError(path.string() + ": missing CSV header");
  }
  const auto cols = csv::split_line(header);
  if (cols == std::vector<std::string>{"id", "dataset", "mu", "sigma"}) {
    auto in = open_or_throw(path);
    try {
      return read_normalized(in);
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ": " + e.what());
    }
  }
  IngestOptions opts = options;
  if (cols == std::vector<std::string>{"id", "mos"}) opts.has_sigma = false;
  else if (cols == std::vector<std::string>{"id", "mos", "std"}) opts.has_sigma = true;
  return ingest(path, opts);
}

}  // namespace softscore
