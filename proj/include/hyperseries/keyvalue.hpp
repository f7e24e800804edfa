/* Copyright 2026 The hyperseries Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hyperseries {

// Line-oriented `key = value` text with `#` comments. Keys may repeat; the
// last occurrence wins for scalar lookups.
class KeyValues {
 public:
  struct Entry {
    std::string key;
    std::string value;
    std::size_t line = 0;
  };

  static KeyValues parse(const std::string& text, const std::string& origin = "<text>");
  static KeyValues load(const std::filesystem::path& path);

  bool has(const std::string& key) const;
  std::optional<std::string> get(const std::string& key) const;
  std::vector<Entry> all(const std::string& key) const;
  const std::vector<Entry>& entries() const { return entries_; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;

  void set(const std::string& key, const std::string& value);
  // Serializes entries in order (one `key=value` per line).
  std::string str() const;
  const std::string& origin() const { return origin_; }

 private:
  const Entry* find(const std::string& key) const;

  std::string origin_;
  std::vector<Entry> entries_;
};

std::string trim(const std::string& s);
std::vector<std::string> split(const std::string& s, char delimiter);
double parse_double(const std::string& s, const std::string& context);
std::uint64_t parse_u64(const std::string& s, const std::string& context);
// Shortest decimal text that reads back to the same double.
std::string format_double(double value);

}  // namespace hyperseries
