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

#include "hyperseries/synth.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace hyperseries {

bool Regime::stationary() const {
  return std::abs(phi2) < 1.0 && phi2 + phi1 < 1.0 && phi2 - phi1 < 1.0;
}

StationaryMoments stationary_moments(const Regime& r) {
  if (!r.stationary()) fail(ErrorKind::kContract, "regime is not stationary");
  const double denom = (1.0 + r.phi2) * ((1.0 - r.phi2) * (1.0 - r.phi2) - r.phi1 * r.phi1);
  const double variance = r.sigma * r.sigma * (1.0 - r.phi2) / denom;
  return {r.mu, std::sqrt(variance), r.phi1 / (1.0 - r.phi2)};
}

void RegimeSpec::validate() const {
  if (regimes.empty()) fail(ErrorKind::kConfig, "regime spec has no regimes");
  if (length == 0) fail(ErrorKind::kConfig, "regime spec length must be positive");
  for (std::size_t i = 0; i < regimes.size(); ++i) {
    const Regime& r = regimes[i];
    if (!r.stationary())
      fail(ErrorKind::kConfig, "regime " + std::to_string(i) + " is not stationary");
    if (!(r.sigma >= 0.0)) fail(ErrorKind::kConfig, "regime " + std::to_string(i) + " has negative sigma");
  }
  if (schedule.empty() || schedule.front().first != 0)
    fail(ErrorKind::kConfig, "schedule must start at index 0");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i].second >= regimes.size())
      fail(ErrorKind::kConfig, "schedule references unknown regime " + std::to_string(schedule[i].second));
    if (schedule[i].first >= length) fail(ErrorKind::kConfig, "schedule segment starts past the end");
    if (i > 0 && schedule[i].first <= schedule[i - 1].first)
      fail(ErrorKind::kConfig, "schedule segments must have strictly increasing starts");
  }
}

std::vector<std::size_t> RegimeSpec::regime_path() const {
  std::vector<std::size_t> out(length);
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const std::size_t end = i + 1 < schedule.size() ? schedule[i + 1].first : length;
    for (std::size_t t = schedule[i].first; t < end; ++t) out[t] = schedule[i].second;
  }
  return out;
}

RegimeSpec parse_regime_spec(const KeyValues& kv) {
  RegimeSpec spec;
  std::size_t cycle = 0;
  for (const auto& e : kv.entries()) {
    const std::string at = kv.origin() + ":" + std::to_string(e.line);
    std::istringstream is(e.value);
    std::vector<std::string> fields;
    for (std::string f; is >> f;) fields.push_back(f);
    if (e.key == "length") {
      spec.length = static_cast<std::size_t>(parse_u64(e.value, at + ": length"));
    } else if (e.key == "regime") {
      if (fields.size() != 4) fail(ErrorKind::kParse, at + ": regime needs <mu> <phi1> <phi2> <sigma>");
      spec.regimes.push_back({parse_double(fields[0], at), parse_double(fields[1], at),
                              parse_double(fields[2], at), parse_double(fields[3], at)});
    } else if (e.key == "segment") {
      if (fields.size() != 2) fail(ErrorKind::kParse, at + ": segment needs <start> <regime id>");
      spec.schedule.emplace_back(parse_u64(fields[0], at), parse_u64(fields[1], at));
    } else if (e.key == "cycle") {
      cycle = static_cast<std::size_t>(parse_u64(e.value, at + ": cycle"));
      if (cycle == 0) fail(ErrorKind::kParse, at + ": cycle must be positive");
    } else {
      fail(ErrorKind::kParse, at + ": unknown key '" + e.key + "'");
    }
  }
  if (cycle > 0) {
    if (!spec.schedule.empty()) fail(ErrorKind::kParse, kv.origin() + ": use either segment or cycle, not both");
    for (std::size_t s = 0, id = 0; s < spec.length; s += cycle, ++id)
      spec.schedule.emplace_back(s, id % std::max<std::size_t>(1, spec.regimes.size()));
  }
  spec.validate();
  return spec;
}

RegimeSpec load_regime_spec(const std::filesystem::path& path) {
  return parse_regime_spec(KeyValues::load(path));
}

std::string format_regime_spec(const RegimeSpec& spec) {
  std::ostringstream os;
  os << "length = " << spec.length << '\n';
  for (const Regime& r : spec.regimes)
    os << "regime = " << format_double(r.mu) << ' ' << format_double(r.phi1) << ' '
       << format_double(r.phi2) << ' ' << format_double(r.sigma) << '\n';
  for (const auto& [start, id] : spec.schedule) os << "segment = " << start << ' ' << id << '\n';
  return os.str();
}

namespace {
RegimeSpec cycled(std::vector<Regime> regimes, std::size_t length, std::size_t block) {
  RegimeSpec spec;
  spec.regimes = std::move(regimes);
  spec.length = length;
  for (std::size_t s = 0, id = 0; s < length; s += block, ++id) spec.schedule.emplace_back(s, id % spec.regimes.size());
  spec.validate();
  return spec;
}
}  // namespace

RegimeSpec reference_regime_spec() {
  return cycled({{0.0, 0.5, 0.2, 0.1}, {2.0, -0.4, 0.3, 0.1}}, 6000, 500);
}

RegimeSpec severe_regime_spec() {
  return cycled({{0.0, 0.9, 0.0, 0.1}, {0.0, -0.9, 0.0, 0.1}, {0.5, 0.0, 0.0, 0.3}}, 6000, 300);
}

SynthSeries generate(const RegimeSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const auto path = spec.regime_path();
  SynthSeries out;
  out.regime = path;
  out.series.values = Tensor(Shape{1, spec.length});
  out.series.names = {"x"};
  out.series.timestamps.reserve(spec.length);
  double prev1 = spec.regimes[path[0]].mu;
  double prev2 = prev1;
  for (std::size_t t = 0; t < spec.length; ++t) {
    const Regime& r = spec.regimes[path[t]];
    const double eps = noise(rng);
    const double x = r.mu + r.phi1 * (prev1 - r.mu) + r.phi2 * (prev2 - r.mu) + r.sigma * eps;
    out.series.values.at(0, t) = x;
    out.series.timestamps.push_back(std::to_string(t));
    prev2 = prev1;
    prev1 = x;
  }
  return out;
}

double oracle_one_step(const RegimeSpec& spec, double prev1, double prev2, std::size_t regime) {
  if (regime >= spec.regimes.size()) fail(ErrorKind::kContract, "oracle: unknown regime");
  const Regime& r = spec.regimes[regime];
  return r.mu + r.phi1 * (prev1 - r.mu) + r.phi2 * (prev2 - r.mu);
}

OracleStats oracle_rmse(const RegimeSpec& spec, const SynthSeries& data,
                        const std::vector<std::size_t>& targets) {
  OracleStats stats;
  std::vector<double> sq(spec.regimes.size(), 0.0);
  stats.count_per_regime.assign(spec.regimes.size(), 0);
  double total = 0.0;
  for (std::size_t t : targets) {
    if (t < 2 || t >= data.series.length()) fail(ErrorKind::kContract, "oracle: target index out of range");
    const std::size_t r = data.regime[t];
    const double pred =
        oracle_one_step(spec, data.series.values.at(0, t - 1), data.series.values.at(0, t - 2), r);
    const double e = data.series.values.at(0, t) - pred;
    sq[r] += e * e;
    total += e * e;
    ++stats.count_per_regime[r];
  }
  stats.count = targets.size();
  stats.rmse = targets.empty() ? 0.0 : std::sqrt(total / static_cast<double>(targets.size()));
  for (std::size_t r = 0; r < sq.size(); ++r)
    stats.rmse_per_regime.push_back(
        stats.count_per_regime[r] ? std::sqrt(sq[r] / static_cast<double>(stats.count_per_regime[r])) : 0.0);
  return stats;
}

double shift_severity(const RegimeSpec& spec) {
  if (spec.regimes.size() < 2) fail(ErrorKind::kContract, "shift severity needs at least two regimes");
  std::vector<StationaryMoments> m;
  for (const Regime& r : spec.regimes) m.push_back(stationary_moments(r));
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = i + 1; j < m.size(); ++j) {
      total += std::abs(m[i].mean - m[j].mean) + std::abs(m[i].stddev - m[j].stddev);
      ++pairs;
    }
  return total / static_cast<double>(pairs);
}

}  // namespace hyperseries
