#include "softscore/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "softscore/csv.hpp"
#include "softscore/errors.hpp"

namespace softscore {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool valid_key(std::string_view key) {
  return !key.empty() && std::all_of(key.begin(), key.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

bool needs_quotes(const std::string& value) {
  if (value == "true" || value == "false") return false;
  double d = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), d);
  return value.empty() || ec != std::errc() || ptr != value.data() + value.size();
}

}  // namespace

FlatConfig FlatConfig::parse(std::istream& in) {
  FlatConfig cfg;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ParseError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (!valid_key(key)) throw ParseError("config line " + std::to_string(line_no) + ": invalid key");
    std::string parsed;
    if (!value.empty() && value.front() == '"') {
      const auto close = value.find('"', 1);
      if (close == std::string_view::npos)
        throw ParseError("config line " + std::to_string(line_no) + ": unterminated string");
      const auto rest = trim(value.substr(close + 1));
      if (!rest.empty() && rest.front() != '#')
        throw ParseError("config line " + std::to_string(line_no) + ": text after string");
      parsed = std::string(value.substr(1, close - 1));
    } else {
      const auto hash = value.find('#');
      parsed = std::string(trim(value.substr(0, hash)));
      if (parsed.empty()) throw ParseError("config line " + std::to_string(line_no) + ": empty value");
    }
    if (!cfg.values_.emplace(std::string(key), std::move(parsed)).second)
      throw ParseError("config line " + std::to_string(line_no) + ": duplicate key '" + std::string(key) + "'");
  }
  return cfg;
}

FlatConfig FlatConfig::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse(in);
}

FlatConfig FlatConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file '" + path.string() + "'");
  try {
    return parse(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::optional<std::string> FlatConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string FlatConfig::get_string(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double FlatConfig::get_double(const std::string& key, double fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  try {
    return csv::parse_real(*v, 0, key);
  } catch (const ParseError&) {
    throw ParseError("config key '" + key + "': expected a number, got '" + *v + "'");
  }
}

std::uint64_t FlatConfig::get_uint(const std::string& key, std::uint64_t fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size())
    throw ParseError("config key '" + key + "': expected a non-negative integer, got '" + *v + "'");
  return out;
}

bool FlatConfig::get_bool(const std::string& key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  if (*v == "true") return true;
  if (*v == "false") return false;
  throw ParseError("config key '" + key + "': expected true or false, got '" + *v + "'");
}

void FlatConfig::require_known(std::initializer_list<std::string_view> known) const {
  for (const auto& [key, value] : values_) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ParseError("unknown config key '" + key + "'");
  }
}

std::string FlatConfig::serialize() const {
  std::string out;
  for (const auto& [key, value] : values_) {
    out += key;
    out += " = ";
    out += needs_quotes(value) ? "\"" + value + "\"" : value;
    out += '\n';
  }
  return out;
}

}  // namespace softscore
