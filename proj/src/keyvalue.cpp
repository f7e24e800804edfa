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

#include "hyperseries/keyvalue.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "hyperseries/error.hpp"

namespace hyperseries {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char delimiter) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(s);
  while (std::getline(is, field, delimiter)) out.push_back(trim(field));
  if (!s.empty() && s.back() == delimiter) out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& context) {
  const std::string t = trim(s);
  double v = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (!t.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (t.empty() || ec != std::errc() || ptr != last)
    fail(ErrorKind::kParse, context + ": '" + t + "' is not a number");
  return v;
}

std::uint64_t parse_u64(const std::string& s, const std::string& context) {
  const std::string t = trim(s);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    fail(ErrorKind::kParse, context + ": '" + t + "' is not a non-negative integer");
  return v;
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

KeyValues KeyValues::parse(const std::string& text, const std::string& origin) {
  KeyValues kv;
  kv.origin_ = origin;
  std::istringstream is(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(is, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::kParse, origin + ":" + std::to_string(number) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) fail(ErrorKind::kParse, origin + ":" + std::to_string(number) + ": empty key");
    kv.entries_.push_back({std::move(key), trim(line.substr(eq + 1)), number});
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kFile, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

const KeyValues::Entry* KeyValues::find(const std::string& key) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it)
    if (it->key == key) return &*it;
  return nullptr;
}

bool KeyValues::has(const std::string& key) const { return find(key) != nullptr; }

std::optional<std::string> KeyValues::get(const std::string& key) const {
  if (const Entry* e = find(key)) return e->value;
  return std::nullopt;
}

std::vector<KeyValues::Entry> KeyValues::all(const std::string& key) const {
  std::vector<Entry> out;
  for (const auto& e : entries_)
    if (e.key == key) out.push_back(e);
  return out;
}

namespace {
std::string where(const std::string& origin, const KeyValues::Entry& e) {
  return origin + ":" + std::to_string(e.line) + ": " + e.key;
}
}  // namespace

std::string KeyValues::get_string(const std::string& key, const std::string& fallback) const {
  const Entry* e = find(key);
  return e ? e->value : fallback;
}

std::size_t KeyValues::get_size(const std::string& key, std::size_t fallback) const {
  const Entry* e = find(key);
  return e ? static_cast<std::size_t>(parse_u64(e->value, where(origin_, *e))) : fallback;
}

std::uint64_t KeyValues::get_u64(const std::string& key, std::uint64_t fallback) const {
  const Entry* e = find(key);
  return e ? parse_u64(e->value, where(origin_, *e)) : fallback;
}

double KeyValues::get_double(const std::string& key, double fallback) const {
  const Entry* e = find(key);
  return e ? parse_double(e->value, where(origin_, *e)) : fallback;
}

void KeyValues::set(const std::string& key, const std::string& value) {
  bool found = false;
  for (auto& e : entries_)
    if (e.key == key) {
      e.value = value;
      found = true;
    }
  if (!found) entries_.push_back({key, value, 0});
}

std::string KeyValues::str() const {
  std::string out;
  for (const auto& e : entries_) out += e.key + "=" + e.value + "\n";
  return out;
}

}  // namespace hyperseries
