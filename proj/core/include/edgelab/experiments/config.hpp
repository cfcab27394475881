#pragma once

#include "edgelab/common.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace edgelab::experiments {

/// Flat `key = value` configuration. Getters record every value they hand out
/// (defaults included), so the resolved snapshot reproduces the run.
class Config {
 public:
  /// Lines are `key = value`; `#` starts a comment; blank lines are skipped.
  static Config parse(std::istream& in);
  static Config load(const std::string& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;
  /// Later values win.
  void merge(const Config& overrides);

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated list.
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<int> get_ints(const std::string& key, const std::vector<int>& fallback) const;
  std::vector<std::string> get_strings(const std::string& key, const std::vector<std::string>& fallback) const;

  /// Keys that were set but never read; usually typos.
  std::vector<std::string> unused() const;

  /// Every value read so far plus every explicitly set key, sorted.
  void write_resolved(std::ostream& out) const;

  const std::map<std::string, std::string>& entries() const noexcept { return values_; }

 private:
  const std::string* find(const std::string& key) const;
  void record(const std::string& key, const std::string& value) const;

  std::map<std::string, std::string> values_;
  mutable std::map<std::string, std::string> resolved_;
};

std::string join(const std::vector<double>& values);
std::string join(const std::vector<int>& values);
std::string join(const std::vector<std::string>& values);

}  // namespace edgelab::experiments
