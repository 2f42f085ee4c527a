#pragma once

#include <string>
#include <vector>

#include "vigil/errors.hpp"

namespace vigil {

// Canonical line-oriented `key = value` text: UTF-8, `#` comments, no
// sections. Repeated keys are kept in order (used for `layer` lines).
struct ConfigEntry {
  std::string key;
  std::string value;
};

class ConfigDoc {
public:
  static ConfigDoc parse(const std::string& text);
  static ConfigDoc load(const std::string& path);

  std::string serialize() const;

  void set(const std::string& key, const std::string& value);
  void add(const std::string& key, const std::string& value);

  const std::string* find(const std::string& key) const;
  std::vector<std::string> all(const std::string& key) const;
  bool has(const std::string& key) const { return find(key) != nullptr; }

  // Typed lookups; throw ParseError naming the key on bad values.
  long long get_int(const std::string& key, long long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;

  const std::vector<ConfigEntry>& entries() const { return entries_; }

private:
  std::vector<ConfigEntry> entries_;
};

// Shared numeric parsing helpers (strict: the whole token must consume).
long long parse_int(const std::string& token, const std::string& what);
double parse_double(const std::string& token, const std::string& what);

// Float formatting that round-trips exactly (shortest of %.*g at
// max_digits10), used everywhere canonical text is produced.
std::string format_double(double v);

}  // namespace vigil
