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
#include <string>
#include <utility>
#include <vector>

#include "hyperseries/data.hpp"
#include "hyperseries/keyvalue.hpp"

namespace hyperseries {

// x_t = mu + phi1 (x_{t-1} - mu) + phi2 (x_{t-2} - mu) + N(0, sigma^2)
struct Regime {
  double mu = 0.0;
  double phi1 = 0.0;
  double phi2 = 0.0;
  double sigma = 0.0;

  bool stationary() const;
};

struct StationaryMoments {
  double mean = 0.0;
  double stddev = 0.0;
  double lag1_autocorrelation = 0.0;
};
StationaryMoments stationary_moments(const Regime& r);

struct RegimeSpec {
  std::vector<Regime> regimes;
  // (start index, regime id), sorted by start; first start is 0.
  std::vector<std::pair<std::size_t, std::size_t>> schedule;
  std::size_t length = 0;

  void validate() const;
  std::vector<std::size_t> regime_path() const;
};

// Text form:
//   length  = 6000
//   regime  = <mu> <phi1> <phi2> <sigma>     (ids in order of appearance)
//   segment = <start> <regime id>            (or)  cycle = <block length>
RegimeSpec parse_regime_spec(const KeyValues& kv);
RegimeSpec load_regime_spec(const std::filesystem::path& path);
std::string format_regime_spec(const RegimeSpec& spec);

// Two AR(2) regimes alternating every 500 steps over 6000 steps.
RegimeSpec reference_regime_spec();
// Regimes that share a level and differ mainly in their dynamics, so that
// coarse pooling of the history hides which one is active.
RegimeSpec severe_regime_spec();

struct SynthSeries {
  RawSeries series;                 // one row named "x", integer timestamps "t"
  std::vector<std::size_t> regime;  // active regime per step
};

SynthSeries generate(const RegimeSpec& spec, std::uint64_t seed);

// Minimum-MSE one-step forecast given the two previous values.
double oracle_one_step(const RegimeSpec& spec, double prev1, double prev2, std::size_t regime);

struct OracleStats {
  double rmse = 0.0;
  std::size_t count = 0;
  std::vector<double> rmse_per_regime;
  std::vector<std::size_t> count_per_regime;
};

// Oracle error over the given target time indices (each must be >= 2).
OracleStats oracle_rmse(const RegimeSpec& spec, const SynthSeries& data,
                        const std::vector<std::size_t>& targets);

// Mean over regime pairs of |mean_i - mean_j| + |std_i - std_j| of the
// stationary distributions.
double shift_severity(const RegimeSpec& spec);

}  // namespace hyperseries
