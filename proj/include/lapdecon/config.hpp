#pragma once

// Flat key-value configuration files:
//
//   # comment
//   g.denom = [1, 2, 1]
//   design.n = 1024, 2048, 4096
//   truth = KINK_1
//
// Lists may be written with or without brackets, separated by commas or
// whitespace. Keys are case-sensitive; a repeated key is an error.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lapdecon/errors.hpp"

namespace lapdecon {

class Config {
 public:
  Config() = default;

  static Config parse(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
      if (!cfg.values_.emplace(key, value).second)
        throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    return cfg;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get_string(const std::string& key, const std::optional<std::string>& fallback = std::nullopt) const {
    const auto it = values_.find(key);
    if (it != values_.end()) return it->second;
    if (fallback) return *fallback;
    throw ConfigError("config: missing required key '" + key + "'");
  }

  double get_double(const std::string& key, std::optional<double> fallback = std::nullopt) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      throw ConfigError("config: missing required key '" + key + "'");
    }
    return to_double(key, get_string(key));
  }

  int get_int(const std::string& key, std::optional<int> fallback = std::nullopt) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      throw ConfigError("config: missing required key '" + key + "'");
    }
    const double v = to_double(key, get_string(key));
    if (v != static_cast<double>(static_cast<long long>(v))) throw ConfigError("config: '" + key + "' must be an integer");
    return static_cast<int>(v);
  }

  std::vector<double> get_list(const std::string& key, const std::optional<std::vector<double>>& fallback = std::nullopt) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      throw ConfigError("config: missing required key '" + key + "'");
    }
    std::string s = get_string(key);
    std::replace_if(s.begin(), s.end(), [](char c) { return c == '[' || c == ']' || c == ','; }, ' ');
    std::istringstream in(s);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) out.push_back(to_double(key, tok));
    if (out.empty()) throw ConfigError("config: '" + key + "' is an empty list");
    return out;
  }

  std::vector<int> get_int_list(const std::string& key, const std::optional<std::vector<int>>& fallback = std::nullopt) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      throw ConfigError("config: missing required key '" + key + "'");
    }
    std::vector<int> out;
    for (double v : get_list(key)) {
      if (v != static_cast<double>(static_cast<long long>(v)))
        throw ConfigError("config: '" + key + "' must contain integers");
      out.push_back(static_cast<int>(v));
    }
    return out;
  }

  /// Rejects keys outside `known`, catching typos.
  void require_known(const std::set<std::string>& known) const {
    for (const auto& [k, v] : values_)
      if (!known.count(k)) throw ConfigError("config: unknown key '" + k + "'");
  }

  /// Sorted "key=value" lines; the input to the config hash.
  std::string canonical() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
    return out;
  }

  /// FNV-1a 64-bit hash of canonical(), as 16 hex digits.
  std::string hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical()) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  static double to_double(const std::string& key, const std::string& s) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config: '" + key + "' has non-numeric value '" + s + "'");
    }
  }

  std::map<std::string, std::string> values_;
};

}  // namespace lapdecon
