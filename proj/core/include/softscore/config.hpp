#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace softscore {

/// Flat `key = value` document (a TOML subset without tables). Values are
/// bare numbers/booleans or double-quoted strings; '#' starts a comment.
class FlatConfig {
 public:
  static FlatConfig parse(std::istream& in);
  static FlatConfig parse(std::string_view text);
  static FlatConfig load(const std::filesystem::path& path);

  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  std::optional<std::string> get(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Throws ParseError naming the first key not in `known`.
  void require_known(std::initializer_list<std::string_view> known) const;

  /// Sorted keys; strings quoted. parse(serialize()) reproduces the map.
  std::string serialize() const;

  const std::map<std::string, std::string>& values() const noexcept { return values_; }
  friend bool operator==(const FlatConfig&, const FlatConfig&) = default;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace softscore
