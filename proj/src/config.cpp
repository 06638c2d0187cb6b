// SPDX-License-Identifier: Apache-2.0
#include "bridgeflow/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bridgeflow {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

// Removes a trailing comment, honouring double-quoted strings.
std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (ch == '"') in_string = !in_string;
    if (ch == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

[[noreturn]] void bad_line(std::size_t lineno, const std::string& what) {
  throw std::invalid_argument("config line " + std::to_string(lineno) + ": " + what);
}

bool valid_key(const std::string& key) {
  if (key.empty()) return false;
  for (const char ch : key) {
    const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                    (ch >= '0' && ch <= '9') || ch == '_' || ch == '.';
    if (!ok) return false;
  }
  return true;
}

// Parses one scalar literal: quoted string, boolean, or number.
Config::Value parse_literal(const std::string& raw, std::size_t lineno) {
  const std::string text = trim(raw);
  if (text.empty()) bad_line(lineno, "missing value");
  if (text.front() == '"') {
    if (text.size() < 2 || text.back() != '"')
      bad_line(lineno, "unterminated string: " + text);
    return text.substr(1, text.size() - 2);
  }
  if (text == "true") return true;
  if (text == "false") return false;
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0' || !std::isfinite(value))
    bad_line(lineno, "cannot parse value: " + text);
  return value;
}

// Splits "a = 1, b = \"x\"" on top-level commas (quotes respected).
std::vector<std::string> split_table_items(const std::string& body, std::size_t lineno) {
  std::vector<std::string> items;
  std::string current;
  bool in_string = false;
  for (const char ch : body) {
    if (ch == '"') in_string = !in_string;
    if (ch == ',' && !in_string) {
      items.push_back(current);
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  if (in_string) bad_line(lineno, "unterminated string in table");
  items.push_back(current);
  return items;
}

std::string format_number(double value) {
  // Integral values print without exponent noise; everything else full
  // round-trip precision.
  if (value == static_cast<std::int64_t>(value) && std::abs(value) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(value));
    return buf;
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

}  // namespace

Config Config::parse_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open config file: " + file.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_string(text.str());
}

Config Config::parse_string(const std::string& text) {
  Config cfg;
  std::istringstream lines(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    const std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) bad_line(lineno, "expected key = value");
    const std::string key = trim(body.substr(0, eq));
    if (!valid_key(key)) bad_line(lineno, "invalid key: '" + key + "'");
    const std::string rhs = trim(body.substr(eq + 1));
    if (!rhs.empty() && rhs.front() == '{') {
      if (rhs.back() != '}') bad_line(lineno, "inline table must close on the same line");
      const std::string inner = rhs.substr(1, rhs.size() - 2);
      if (trim(inner).empty()) bad_line(lineno, "empty inline table");
      for (const std::string& item : split_table_items(inner, lineno)) {
        const auto item_eq = item.find('=');
        if (item_eq == std::string::npos) bad_line(lineno, "table item needs key = value");
        const std::string sub = trim(item.substr(0, item_eq));
        if (!valid_key(sub) || sub.find('.') != std::string::npos)
          bad_line(lineno, "invalid table key: '" + sub + "'");
        const std::string dotted = key + "." + sub;
        if (cfg.entries_.count(dotted)) bad_line(lineno, "duplicate key: " + dotted);
        cfg.entries_[dotted] = parse_literal(item.substr(item_eq + 1), lineno);
      }
    } else {
      if (cfg.entries_.count(key)) bad_line(lineno, "duplicate key: " + key);
      cfg.entries_[key] = parse_literal(rhs, lineno);
    }
  }
  return cfg;
}

void Config::set_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("--set expects key=value, got: " + assignment);
  const std::string key = trim(assignment.substr(0, eq));
  if (!valid_key(key)) throw std::invalid_argument("--set: invalid key: '" + key + "'");
  const std::string raw = trim(assignment.substr(eq + 1));
  try {
    entries_[key] = parse_literal(raw, 0);
  } catch (const std::invalid_argument&) {
    // Bare words from the command line are convenient shorthand for strings.
    if (raw.empty()) throw;
    entries_[key] = raw;
  }
}

bool Config::has(const std::string& key) const { return entries_.count(key) != 0; }

double Config::number(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw std::invalid_argument("config: missing key: " + key);
  if (const double* v = std::get_if<double>(&it->second)) return *v;
  throw std::invalid_argument("config: key '" + key + "' is not a number");
}

double Config::number_or(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

std::int64_t Config::integer(const std::string& key) const {
  const double v = number(key);
  const auto i = static_cast<std::int64_t>(v);
  if (static_cast<double>(i) != v)
    throw std::invalid_argument("config: key '" + key + "' is not an integer");
  return i;
}

std::int64_t Config::integer_or(const std::string& key, std::int64_t fallback) const {
  return has(key) ? integer(key) : fallback;
}

std::string Config::str(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw std::invalid_argument("config: missing key: " + key);
  if (const std::string* v = std::get_if<std::string>(&it->second)) return *v;
  throw std::invalid_argument("config: key '" + key + "' is not a string");
}

std::string Config::str_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? str(key) : fallback;
}

bool Config::flag_or(const std::string& key, bool fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  if (const bool* v = std::get_if<bool>(&it->second)) return *v;
  throw std::invalid_argument("config: key '" + key + "' is not a boolean");
}

std::vector<std::string> Config::keys_with_prefix(const std::string& prefix) const {
  const std::string dotted = prefix + ".";
  std::vector<std::string> keys;
  for (const auto& [key, value] : entries_)
    if (key.rfind(dotted, 0) == 0) keys.push_back(key);
  return keys;
}

void Config::require_known(const std::set<std::string>& allowed,
                           const std::set<std::string>& allowed_prefixes) const {
  for (const auto& [key, value] : entries_) {
    if (allowed.count(key)) continue;
    const auto dot = key.find('.');
    if (dot != std::string::npos && allowed_prefixes.count(key.substr(0, dot))) continue;
    throw std::invalid_argument("config: unknown key: " + key);
  }
}

std::string Config::canonical() const {
  std::ostringstream out;
  for (const auto& [key, value] : entries_) {
    out << key << " = ";
    if (const double* num = std::get_if<double>(&value)) {
      out << format_number(*num);
    } else if (const bool* flag = std::get_if<bool>(&value)) {
      out << (*flag ? "true" : "false");
    } else {
      out << '"' << std::get<std::string>(value) << '"';
    }
    out << '\n';
  }
  return out.str();
}

std::string Config::hash() const {
  const std::string text = canonical();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace bridgeflow
