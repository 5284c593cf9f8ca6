#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ampsi {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat key-value configuration.
//
//   # comment
//   [section]
//   key = value
//
// Keys inside a section are stored as "section.key". Values may be lists
// separated by commas or whitespace.
class Config {
 public:
  static Config parse(const std::string& text, const std::string& origin = "<string>");
  static Config load(const std::filesystem::path& path);

  // "key=value" overrides, e.g. from the command line.
  void set(const std::string& key, const std::string& value);
  void apply_override(const std::string& assignment);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::string str(const std::string& key) const;
  std::string str(const std::string& key, const std::string& fallback) const;
  double num(const std::string& key) const;
  double num(const std::string& key, double fallback) const;
  long long integer(const std::string& key) const;
  long long integer(const std::string& key, long long fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  std::vector<double> list(const std::string& key) const;
  std::vector<double> list(const std::string& key, std::vector<double> fallback) const;

  const std::map<std::string, std::string>& entries() const noexcept { return values_; }
  // Canonical "key = value" lines, sorted by key.
  std::string canonical() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace ampsi
