// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace respnet {

/// Flat `key = value` text. Blank lines and `#` comments are ignored.
/// Lists are comma-separated; nested lists separate groups with `;`.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text, const std::string& source = "<config>");
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  void set(const std::string& key, std::string value) { entries_[key] = std::move(value); }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::size_t> get_sizes(const std::string& key, const std::vector<std::size_t>& fallback) const;
  std::vector<std::vector<std::size_t>> get_size_groups(const std::string& key,
                                                        const std::vector<std::vector<std::size_t>>& fallback) const;

  /// Throws InvalidConfig naming the first key not in `known`.
  void require_known(const std::vector<std::string>& known) const;

  /// Keys in sorted order, one `key = value` per line.
  std::string serialize() const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
  std::string source_ = "<config>";
};

std::string join_sizes(const std::vector<std::size_t>& values);
std::string join_size_groups(const std::vector<std::vector<std::size_t>>& groups);
/// Round-trippable decimal rendering of a double.
std::string format_double(double value);

}  // namespace respnet
