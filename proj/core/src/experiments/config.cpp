#include "edgelab/experiments/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace edgelab::experiments {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || *end != '\0' || errno == ERANGE)
    throw ValidationError("config key '" + key + "': not a number: '" + text + "'");
  return v;
}

long long to_int(const std::string& key, const std::string& text) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(text.c_str(), &end, 10);
  if (text.empty() || *end != '\0' || errno == ERANGE)
    throw ValidationError("config key '" + key + "': not an integer: '" + text + "'");
  return v;
}

std::string format(double v) {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return out.str();
}

}  // namespace

Config Config::parse(std::istream& in) {
  Config config;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(number, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError(number, "empty key");
    config.values_[key] = trim(line.substr(eq + 1));
  }
  return config;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path);
  return parse(in);
}

void Config::set(const std::string& key, const std::string& value) { values_[key] = value; }

bool Config::has(const std::string& key) const { return values_.count(key) != 0; }

void Config::merge(const Config& overrides) {
  for (const auto& [k, v] : overrides.values_) values_[k] = v;
}

const std::string* Config::find(const std::string& key) const {
  const auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

void Config::record(const std::string& key, const std::string& value) const { resolved_[key] = value; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  const std::string* v = find(key);
  const std::string out = v ? *v : fallback;
  record(key, out);
  return out;
}

double Config::get_double(const std::string& key, double fallback) const {
  const std::string* v = find(key);
  const double out = v ? to_double(key, *v) : fallback;
  record(key, v ? *v : format(out));
  return out;
}

long long Config::get_int(const std::string& key, long long fallback) const {
  const std::string* v = find(key);
  const long long out = v ? to_int(key, *v) : fallback;
  record(key, std::to_string(out));
  return out;
}

std::uint64_t Config::get_seed(const std::string& key, std::uint64_t fallback) const {
  const std::string* v = find(key);
  if (!v) {
    record(key, std::to_string(fallback));
    return fallback;
  }
  if (!v->empty() && v->front() == '-') throw ValidationError("config key '" + key + "': seed must be nonnegative");
  errno = 0;
  char* end = nullptr;
  const unsigned long long out = std::strtoull(v->c_str(), &end, 10);
  if (v->empty() || *end != '\0' || errno == ERANGE)
    throw ValidationError("config key '" + key + "': not a seed: '" + *v + "'");
  record(key, *v);
  return out;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const std::string* v = find(key);
  bool out = fallback;
  if (v) {
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") out = true;
    else if (*v == "false" || *v == "0" || *v == "no" || *v == "off") out = false;
    else throw ValidationError("config key '" + key + "': not a boolean: '" + *v + "'");
  }
  record(key, out ? "true" : "false");
  return out;
}

std::vector<double> Config::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
  const std::string* v = find(key);
  std::vector<double> out;
  if (v) {
    for (const auto& item : split_list(*v)) out.push_back(to_double(key, item));
  } else {
    out = fallback;
  }
  record(key, join(out));
  return out;
}

std::vector<int> Config::get_ints(const std::string& key, const std::vector<int>& fallback) const {
  const std::string* v = find(key);
  std::vector<int> out;
  if (v) {
    for (const auto& item : split_list(*v)) {
      const long long x = to_int(key, item);
      if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
        throw ValidationError("config key '" + key + "': value out of range");
      out.push_back(static_cast<int>(x));
    }
  } else {
    out = fallback;
  }
  record(key, join(out));
  return out;
}

std::vector<std::string> Config::get_strings(const std::string& key, const std::vector<std::string>& fallback) const {
  const std::string* v = find(key);
  std::vector<std::string> out = v ? split_list(*v) : fallback;
  record(key, join(out));
  return out;
}

std::vector<std::string> Config::unused() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_)
    if (!resolved_.count(k)) out.push_back(k);
  return out;
}

void Config::write_resolved(std::ostream& out) const {
  std::map<std::string, std::string> all = resolved_;
  for (const auto& [k, v] : values_) all.emplace(k, v);
  for (const auto& [k, v] : all) out << k << " = " << v << '\n';
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + format(values[i]);
  return out;
}

std::string join(const std::vector<int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + std::to_string(values[i]);
  return out;
}

std::string join(const std::vector<std::string>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + values[i];
  return out;
}

}  // namespace edgelab::experiments
