#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace bfarl {

// Flat `key = value` text format shared by experiment configs and dataset
// recipes. '#' starts a comment; blank lines are ignored; list values are
// comma separated. Keys must be unique.
class KeyValueFile {
 public:
  static KeyValueFile parse(std::istream& in, const std::string& origin = "<input>");
  static KeyValueFile load(const std::string& path);

  bool has(const std::string& key) const;
  std::optional<std::string> get(const std::string& key) const;
  std::string require(const std::string& key) const;

  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;

  // Keys never read through an accessor; lets callers reject typos.
  std::vector<std::string> unused_keys() const;

  const std::string& origin() const { return origin_; }
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::string origin_;
  std::map<std::string, std::string> entries_;
  std::map<std::string, int> lines_;
  mutable std::set<std::string> touched_;
};

std::string trim(const std::string& s);
std::vector<std::string> split_list(const std::string& s, char sep = ',');
double parse_double(const std::string& text, const std::string& what);

}  // namespace bfarl
