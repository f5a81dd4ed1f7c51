// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mctok::io {

// Plain-text `key=value` block. Blank lines and `#` comments are ignored;
// whitespace around keys and values is trimmed. Later keys override earlier.
class KeyValues {
 public:
  static KeyValues parse(std::string_view text);
  static KeyValues load(const std::filesystem::path& path);

  std::string format() const;

  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  std::optional<std::string> get(const std::string& key) const;
  std::string require(const std::string& key) const;
  long long require_int(const std::string& key) const;
  std::uint64_t require_u64(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::vector<long long> require_int_list(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

long long parse_int(std::string_view text);
std::uint64_t parse_u64(std::string_view text);
double parse_double(std::string_view text);

}  // namespace mctok::io
