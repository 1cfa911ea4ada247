#pragma once

// Flat key-value configuration shared by the CLI and the sweep driver.
// Files hold one `key = value` pair per line, `#` starts a comment. The
// canonical dump (sorted keys, full-precision values) is what gets hashed
// into result provenance.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qst {

using KeyValues = std::map<std::string, std::string>;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

} // namespace detail

inline KeyValues parse_config_text(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = detail::trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected `key = value`, got `" + stripped + "`");
    const std::string key = detail::trim(stripped.substr(0, eq));
    const std::string value = detail::trim(stripped.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

inline KeyValues parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

inline std::string dump_config(const KeyValues& kv) {
  std::string out;
  for (const auto& [key, value] : kv) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  }
  return out;
}

/// FNV-1a over the canonical dump; stable across runs and platforms.
inline std::uint64_t config_hash(const KeyValues& kv) {
  const std::string canonical = dump_config(kv);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string config_hash_hex(const KeyValues& kv) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(config_hash(kv)));
  return buf;
}

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// ---------------------------------------------------------------------------
// Typed access. Every failure names the offending key.
// ---------------------------------------------------------------------------

inline bool has_key(const KeyValues& kv, const std::string& key) {
  return kv.find(key) != kv.end();
}

inline double get_double(const KeyValues& kv, const std::string& key,
                         double fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key `" + key + "`: not a number: " + it->second);
  }
}

inline int get_int(const KeyValues& kv, const std::string& key, int fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    std::size_t used = 0;
    const int v = std::stoi(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key `" + key + "`: not an integer: " + it->second);
  }
}

inline std::string get_string(const KeyValues& kv, const std::string& key,
                              const std::string& fallback) {
  const auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

inline bool get_bool(const KeyValues& kv, const std::string& key, bool fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw ConfigError("config key `" + key + "`: expected true/false: " + it->second);
}

/// Axis value lists: comma-separated numbers, each entry either a literal or
/// an inclusive range `start:stop[:step]`.
inline std::vector<double> parse_value_list(const std::string& text,
                                            const std::string& key) {
  std::vector<double> values;
  std::istringstream in(text);
  std::string item;
  const auto bad = [&](const std::string& what) {
    return ConfigError("config key `" + key + "`: " + what);
  };
  while (std::getline(in, item, ',')) {
    item = detail::trim(item);
    if (item.empty()) throw bad("empty list entry");
    const auto colon = item.find(':');
    try {
      if (colon == std::string::npos) {
        values.push_back(std::stod(item));
        continue;
      }
      const auto second_colon = item.find(':', colon + 1);
      const double start = std::stod(item.substr(0, colon));
      double stop, step = 1.0;
      if (second_colon == std::string::npos) {
        stop = std::stod(item.substr(colon + 1));
      } else {
        stop = std::stod(item.substr(colon + 1, second_colon - colon - 1));
        step = std::stod(item.substr(second_colon + 1));
      }
      if (!(step > 0.0)) throw bad("range step must be positive: " + item);
      for (double v = start; v <= stop + 1e-12 * std::max(1.0, std::abs(stop));
           v += step)
        values.push_back(v);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw bad("cannot parse list entry: " + item);
    }
  }
  if (values.empty()) throw bad("empty value list");
  return values;
}

} // namespace qst
