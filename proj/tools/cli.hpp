#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "softscore/config.hpp"
#include "softscore/core.hpp"
#include "softscore/discretizer.hpp"
#include "softscore/losses.hpp"

namespace softscore::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataError = 2,
  kNumericError = 3,
};

/// Settings shared by every subcommand.
struct GlobalConfig {
  std::vector<std::string> level_names{"bad", "poor", "fair", "good", "excellent"};
  std::vector<double> level_centers{1.0, 2.0, 3.0, 4.0, 5.0};
  DiscretizeConfig discretize;
  LossConfig loss;
  // -1 quiet, 0 warnings, 1 verbose
  int verbosity = 0;
  // Spaces per JSON indent level; negative prints compact JSON.
  int json_indent = 2;

  LevelScheme scheme() const { return LevelScheme(level_names, level_centers); }

  FlatConfig to_flat() const;
  /// Missing keys keep their defaults. Throws ParseError on unknown keys.
  static GlobalConfig from_flat(const FlatConfig& flat);

  friend bool operator==(const GlobalConfig& a, const GlobalConfig& b);
};

/// Reads a scheme document with `names = "a,b,..."` and
/// `centers = "1,2,..."`.
LevelScheme load_scheme_file(const std::string& path);

/// Shortest decimal that reads back to the same double.
std::string shortest(double value);

/// Entry point. Data goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace softscore::cli
