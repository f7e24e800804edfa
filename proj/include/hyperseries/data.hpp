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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hyperseries/tensor.hpp"

namespace hyperseries {

// Multivariate series laid out features x time.
struct RawSeries {
  Tensor values;                        // [d x n_total]
  std::vector<std::string> timestamps;  // empty or one per step
  std::vector<std::string> names;       // one per feature row

  std::size_t length() const { return values.size() == 0 ? 0 : values.cols(); }
  std::size_t features() const { return values.size() == 0 ? 0 : values.rows(); }
  std::size_t row_of(const std::string& name) const;
};

// Half-open span of time indices.
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

struct WindowConfig {
  std::size_t T = 64;
  std::size_t T_x = 64;
  std::size_t T_y = 1;
  std::size_t stride = 1;
  std::vector<std::size_t> feature_rows;
  std::vector<std::size_t> target_rows;
  // When non-zero the (single) target row holds integer class labels and
  // y becomes a one-hot [classes x 1] column.
  std::size_t classes = 0;
};

struct Instance {
  std::size_t start = 0;  // first time index of x
  Tensor x;               // [d_x x T_x]
  Tensor y;               // [d_y x T_y]
  IndexRange history;     // [0, start)

  IndexRange x_range(std::size_t T_x) const { return {start, start + T_x}; }
};

enum class HistoryPolicy { kRecent, kUniform };
const char* history_policy_name(HistoryPolicy policy);
HistoryPolicy parse_history_policy(const std::string& name);

struct HistoricalSet {
  std::vector<Tensor> windows;      // each [d_x x T], time-ordered
  std::vector<std::size_t> starts;  // first time index of each window
  std::size_t uncapped = 0;         // |history| - T + 1

  std::size_t count() const { return windows.size(); }
};

// Start offsets, relative to the history span, of the kept windows.
std::vector<std::size_t> select_windows(std::size_t span, std::size_t T, std::size_t L_max,
                                        HistoryPolicy policy);

std::vector<Instance> segment(const RawSeries& raw, const WindowConfig& cfg);
HistoricalSet build_history(const Instance& inst, const RawSeries& raw, const WindowConfig& cfg,
                            std::size_t L_max, HistoryPolicy policy);

enum class SplitKind { kTrain, kValid, kTest };

// Per-row min/max fitted on the span covered by the training split.
class NormStats {
 public:
  NormStats() = default;
  NormStats(std::vector<double> min, std::vector<double> max, std::vector<bool> passthrough,
            SplitKind source);

  // Maps every row to [0, 1] over the fitted range; constant rows map to 0.
  Tensor apply(const Tensor& values) const;
  Tensor invert(const Tensor& values) const;
  double apply(std::size_t row, double v) const;
  double invert(std::size_t row, double v) const;
  // Denormalizes a tensor whose rows are the given series rows.
  Tensor invert_rows(const Tensor& values, std::span<const std::size_t> rows) const;

  const std::vector<double>& min() const { return min_; }
  const std::vector<double>& max() const { return max_; }
  SplitKind source() const { return source_; }
  bool fitted() const { return !min_.empty(); }

 private:
  void require_train() const;

  std::vector<double> min_;
  std::vector<double> max_;
  std::vector<bool> passthrough_;
  SplitKind source_ = SplitKind::kTrain;
};

// Rows listed in `passthrough` (e.g. class labels) are left untouched.
NormStats fit_normalizer(const RawSeries& raw, std::span<const Instance> train,
                         std::span<const std::size_t> passthrough = {});
RawSeries normalize(const RawSeries& raw, const NormStats& stats);

struct Splits {
  std::vector<Instance> train;
  std::vector<Instance> valid;
  std::vector<Instance> test;
};

struct SplitFractions {
  double train = 0.6;
  double valid = 0.2;
  double test = 0.2;
};
SplitFractions parse_split(const std::string& text);

// Time-ordered split; train and valid counts are floored, test takes the rest.
Splits chronological_split(std::vector<Instance> instances, SplitFractions fractions);

// Segmented, split and normalized view of a series. The stored series is
// already normalized with train-split statistics.
struct WindowedDataset {
  RawSeries series;
  NormStats stats;
  WindowConfig window;
  Splits splits;
  std::size_t L_max = 128;
  HistoryPolicy policy = HistoryPolicy::kRecent;

  HistoricalSet history(const Instance& inst) const {
    return build_history(inst, series, window, L_max, policy);
  }
};

WindowedDataset make_dataset(const RawSeries& raw, const WindowConfig& window, SplitFractions fractions,
                             std::size_t L_max, HistoryPolicy policy);

enum class MissingPolicy { kForwardFill, kDrop };

struct CsvSchema {
  std::vector<std::string> features;
  std::vector<std::string> targets;
  std::string timestamp;  // empty: none
  char delimiter = ',';
  MissingPolicy missing = MissingPolicy::kForwardFill;
};

// Loads the union of feature and target columns (features first).
RawSeries load_csv(const std::filesystem::path& path, const CsvSchema& schema);
void write_csv(const RawSeries& series, const std::filesystem::path& path,
               const std::string& timestamp_name = "t");

}  // namespace hyperseries
