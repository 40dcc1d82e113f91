#include "bfarl/keyvalue.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "bfarl/error.hpp"

namespace bfarl {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  if (t.empty()) throw ConfigError(what + ": empty number");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || errno == ERANGE)
    throw ConfigError(what + ": cannot parse '" + t + "' as a number");
  return v;
}

KeyValueFile KeyValueFile::parse(std::istream& in, const std::string& origin) {
  KeyValueFile kv;
  kv.origin_ = origin;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (kv.entries_.count(key))
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key +
                        "' (first set on line " + std::to_string(kv.lines_[key]) + ")");
    kv.entries_[key] = trim(line.substr(eq + 1));
    kv.lines_[key] = lineno;
  }
  return kv;
}

KeyValueFile KeyValueFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  return parse(in, path);
}

bool KeyValueFile::has(const std::string& key) const { return entries_.count(key) > 0; }

std::optional<std::string> KeyValueFile::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  touched_.insert(key);
  return it->second;
}

std::string KeyValueFile::require(const std::string& key) const {
  auto v = get(key);
  if (!v) throw ConfigError(origin_ + ": missing required key '" + key + "'");
  return *v;
}

std::string KeyValueFile::get_or(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double KeyValueFile::get_double(const std::string& key, double fallback) const {
  const auto v = get(key);
  return v ? parse_double(*v, origin_ + ": " + key) : fallback;
}

std::int64_t KeyValueFile::get_int(const std::string& key, std::int64_t fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  errno = 0;
  char* end = nullptr;
  const long long parsed = std::strtoll(v->c_str(), &end, 10);
  if (v->empty() || end != v->c_str() + v->size() || errno == ERANGE)
    throw ConfigError(origin_ + ": " + key + ": '" + *v + "' is not an integer");
  return parsed;
}

std::uint64_t KeyValueFile::get_uint(const std::string& key, std::uint64_t fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  errno = 0;
  char* end = nullptr;
  const unsigned long long parsed = std::strtoull(v->c_str(), &end, 10);
  if (v->empty() || (*v)[0] == '-' || end != v->c_str() + v->size() || errno == ERANGE)
    throw ConfigError(origin_ + ": " + key + ": '" + *v + "' is not an unsigned integer");
  return parsed;
}

bool KeyValueFile::get_bool(const std::string& key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError(origin_ + ": " + key + ": '" + *v + "' is not a boolean");
}

std::vector<std::string> KeyValueFile::get_list(const std::string& key) const {
  const auto v = get(key);
  return v ? split_list(*v) : std::vector<std::string>{};
}

std::vector<double> KeyValueFile::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const std::string& item : get_list(key))
    out.push_back(parse_double(item, origin_ + ": " + key));
  return out;
}

std::vector<std::string> KeyValueFile::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [key, value] : entries_)
    if (!touched_.count(key)) out.push_back(key);
  return out;
}

}  // namespace bfarl
