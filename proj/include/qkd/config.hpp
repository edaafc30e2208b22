#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "qkd/errors.hpp"

namespace qkd {

/// One `[header]` section of a config file: ordered key/value pairs.
struct ConfigSection {
  std::string header;                         // full header text, e.g. "link qkd0"
  std::string kind;                           // first word of the header
  std::string name;                           // remainder, may be empty
  std::vector<std::pair<std::string, std::string>> entries;

  bool has(const std::string& key) const {
    for (auto& [k, v] : entries)
      if (k == key) return true;
    return false;
  }

  std::string get(const std::string& key) const {
    for (auto& [k, v] : entries)
      if (k == key) return v;
    throw ConfigError("missing key '" + key + "' in section [" + header + "]");
  }

  std::string get_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? get(key) : fallback;
  }

  double get_double(const std::string& key) const {
    try {
      return std::stod(get(key));
    } catch (const std::logic_error&) {
      throw ConfigError("key '" + key + "' in [" + header + "] is not a number");
    }
  }
  double get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }

  std::uint64_t get_u64(const std::string& key) const {
    try {
      return std::stoull(get(key));
    } catch (const std::logic_error&) {
      throw ConfigError("key '" + key + "' in [" + header + "] is not an integer");
    }
  }
  std::uint64_t get_u64_or(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? get_u64(key) : fallback;
  }
};

namespace detail {
inline std::string strip(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}
}  // namespace detail

/// Parses the `[section]` / `key = value` format used by link and scenario
/// files. `#` and `;` start comments. Keys before any section header go
/// into an unnamed section with kind "".
inline std::vector<ConfigSection> parse_config(std::istream& in) {
  std::vector<ConfigSection> sections;
  ConfigSection current;
  bool have_current = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto cut = line.find_first_of("#;");
    if (cut != std::string::npos) line.erase(cut);
    line = detail::strip(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
      if (have_current) sections.push_back(std::move(current));
      current = ConfigSection{};
      current.header = detail::strip(line.substr(1, line.size() - 2));
      auto sp = current.header.find_first_of(" \t");
      current.kind = current.header.substr(0, sp);
      current.name = sp == std::string::npos ? "" : detail::strip(current.header.substr(sp + 1));
      have_current = true;
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    if (!have_current) {
      current.header = current.kind = current.name = "";
      have_current = true;
    }
    current.entries.emplace_back(detail::strip(line.substr(0, eq)),
                                 detail::strip(line.substr(eq + 1)));
  }
  if (have_current) sections.push_back(std::move(current));
  return sections;
}

inline std::vector<ConfigSection> parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config file: " + path);
  return parse_config(f);
}

inline std::vector<ConfigSection> parse_config_string(const std::string& text) {
  std::istringstream ss(text);
  return parse_config(ss);
}

}  // namespace qkd
