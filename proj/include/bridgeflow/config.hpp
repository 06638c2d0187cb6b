// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace bridgeflow {

/// Plain-text run configuration.
///
/// Format, line oriented:
///
///   # comment
///   seed = 42
///   out_dir = "runs/osc"
///   path = { kind = "bridge", sigma_min = 0.001, sigma = 0.01 }
///
/// Values are numbers, booleans (true/false) or double-quoted strings.  An
/// inline table `name = { k = v, ... }` defines dotted keys `name.k`.
/// Overrides from the command line (`--set key=value`) address the same
/// dotted keys.
class Config {
 public:
  using Value = std::variant<double, bool, std::string>;

  static Config parse_file(const std::filesystem::path& file);
  static Config parse_string(const std::string& text);

  /// Applies a `key=value` override (raw value parsed like a config literal;
  /// bare words are taken as strings).
  void set_override(const std::string& assignment);

  bool has(const std::string& key) const;

  /// Typed getters.  Missing key or wrong type -> std::invalid_argument that
  /// names the key.
  double number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  std::int64_t integer(const std::string& key) const;
  std::int64_t integer_or(const std::string& key, std::int64_t fallback) const;
  std::string str(const std::string& key) const;
  std::string str_or(const std::string& key, const std::string& fallback) const;
  bool flag_or(const std::string& key, bool fallback) const;

  /// All keys under `prefix.` (e.g. the members of one inline table).
  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

  /// Rejects any key not covered by `allowed` (exact dotted keys) or by an
  /// entry of `allowed_prefixes` ("path" covers "path.*").  The error message
  /// names the first offending key.
  void require_known(const std::set<std::string>& allowed,
                     const std::set<std::string>& allowed_prefixes = {}) const;

  /// Canonical text form: sorted dotted keys, one per line, numbers via %.17g.
  /// Stable across runs, used for hashing and the manifest.
  std::string canonical() const;

  /// FNV-1a 64-bit hash of canonical(), as fixed-width hex.
  std::string hash() const;

  const std::map<std::string, Value>& entries() const { return entries_; }

 private:
  std::map<std::string, Value> entries_;
};

}  // namespace bridgeflow
