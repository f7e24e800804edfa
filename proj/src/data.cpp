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

#include "hyperseries/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hyperseries/keyvalue.hpp"

namespace hyperseries {

std::size_t RawSeries::row_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  fail(ErrorKind::kConfig, "series has no column '" + name + "'");
}

const char* history_policy_name(HistoryPolicy policy) {
  return policy == HistoryPolicy::kRecent ? "recent" : "uniform";
}

HistoryPolicy parse_history_policy(const std::string& name) {
  if (name == "recent") return HistoryPolicy::kRecent;
  if (name == "uniform") return HistoryPolicy::kUniform;
  fail(ErrorKind::kConfig, "unknown history policy '" + name + "' (recent, uniform)");
}

std::vector<std::size_t> select_windows(std::size_t span, std::size_t T, std::size_t L_max,
                                        HistoryPolicy policy) {
  if (T == 0 || span < T)
    fail(ErrorKind::kContract, "history span " + std::to_string(span) +
                                   " is shorter than window length " + std::to_string(T));
  const std::size_t L = span - T + 1;
  std::vector<std::size_t> out;
  if (L_max == 0 || L <= L_max) {
    out.resize(L);
    for (std::size_t n = 0; n < L; ++n) out[n] = n;
    return out;
  }
  out.reserve(L_max);
  if (policy == HistoryPolicy::kRecent) {
    for (std::size_t n = L - L_max; n < L; ++n) out.push_back(n);
  } else if (L_max == 1) {
    out.push_back(L - 1);
  } else {
    const std::size_t gaps = L_max - 1;
    for (std::size_t i = 0; i < L_max; ++i) out.push_back((i * (L - 1) + gaps / 2) / gaps);
  }
  return out;
}

namespace {

Tensor gather(const RawSeries& raw, std::span<const std::size_t> rows, std::size_t begin,
              std::size_t len) {
  Tensor out(Shape{rows.size(), len});
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t t = 0; t < len; ++t) out.at(r, t) = raw.values.at(rows[r], begin + t);
  return out;
}

void check_rows(const RawSeries& raw, const WindowConfig& cfg) {
  if (cfg.feature_rows.empty()) fail(ErrorKind::kConfig, "no feature columns selected");
  if (cfg.target_rows.empty()) fail(ErrorKind::kConfig, "no target columns selected");
  for (std::size_t r : cfg.feature_rows)
    if (r >= raw.features()) fail(ErrorKind::kConfig, "feature row out of range");
  for (std::size_t r : cfg.target_rows)
    if (r >= raw.features()) fail(ErrorKind::kConfig, "target row out of range");
  if (cfg.classes > 0 && (cfg.target_rows.size() != 1 || cfg.T_y != 1))
    fail(ErrorKind::kConfig, "classification needs exactly one label column and T_y = 1");
}

}  // namespace

std::vector<Instance> segment(const RawSeries& raw, const WindowConfig& cfg) {
  if (cfg.T == 0 || cfg.T_x == 0 || cfg.T_y == 0 || cfg.stride == 0)
    fail(ErrorKind::kConfig, "T, T_x, T_y and stride must be positive");
  check_rows(raw, cfg);
  const std::size_t n = raw.length();
  const std::size_t minimum = cfg.T + cfg.T_x + cfg.T_y;
  if (n < minimum)
    fail(ErrorKind::kConfig, "series of length " + std::to_string(n) +
                                 " is too short; at least " + std::to_string(minimum) +
                                 " steps are needed (T + T_x + T_y)");
  std::vector<Instance> out;
  for (std::size_t s = cfg.T; s + cfg.T_x + cfg.T_y <= n; s += cfg.stride) {
    Instance inst;
    inst.start = s;
    inst.history = {0, s};
    inst.x = gather(raw, cfg.feature_rows, s, cfg.T_x);
    if (cfg.classes > 0) {
      const double label = raw.values.at(cfg.target_rows[0], s + cfg.T_x);
      const double idx = std::round(label);
      if (idx != label || idx < 0 || idx >= static_cast<double>(cfg.classes))
        fail(ErrorKind::kData, "class label " + format_double(label) + " at step " +
                                   std::to_string(s + cfg.T_x) + " is not in [0, " +
                                   std::to_string(cfg.classes) + ")");
      inst.y = Tensor(Shape{cfg.classes, 1});
      inst.y[static_cast<std::size_t>(idx)] = 1.0;
    } else {
      inst.y = gather(raw, cfg.target_rows, s + cfg.T_x, cfg.T_y);
    }
    out.push_back(std::move(inst));
  }
  return out;
}

HistoricalSet build_history(const Instance& inst, const RawSeries& raw, const WindowConfig& cfg,
                            std::size_t L_max, HistoryPolicy policy) {
  const IndexRange span = inst.history;
  if (span.end > inst.start) fail(ErrorKind::kContract, "history overlaps the input window");
  HistoricalSet set;
  const auto offsets = select_windows(span.size(), cfg.T, L_max, policy);
  set.uncapped = span.size() - cfg.T + 1;
  set.windows.reserve(offsets.size());
  for (std::size_t o : offsets) {
    set.starts.push_back(span.begin + o);
    set.windows.push_back(gather(raw, cfg.feature_rows, span.begin + o, cfg.T));
  }
  return set;
}

NormStats::NormStats(std::vector<double> min, std::vector<double> max, std::vector<bool> passthrough,
                     SplitKind source)
    : min_(std::move(min)), max_(std::move(max)), passthrough_(std::move(passthrough)), source_(source) {
  if (min_.size() != max_.size() || passthrough_.size() != min_.size())
    fail(ErrorKind::kContract, "normalizer statistics have inconsistent lengths");
  for (std::size_t i = 0; i < min_.size(); ++i)
    if (max_[i] < min_[i]) fail(ErrorKind::kContract, "normalizer max < min");
}

void NormStats::require_train() const {
  if (source_ != SplitKind::kTrain)
    fail(ErrorKind::kContract, "normalization statistics must come from the training split");
  if (!fitted()) fail(ErrorKind::kContract, "normalizer is not fitted");
}

double NormStats::apply(std::size_t row, double v) const {
  require_train();
  if (passthrough_[row]) return v;
  const double range = max_[row] - min_[row];
  return range > 0 ? (v - min_[row]) / range : 0.0;
}

double NormStats::invert(std::size_t row, double v) const {
  require_train();
  if (passthrough_[row]) return v;
  const double range = max_[row] - min_[row];
  return range > 0 ? v * range + min_[row] : min_[row];
}

Tensor NormStats::apply(const Tensor& values) const {
  if (values.rows() != min_.size()) fail(ErrorKind::kDimension, "normalizer row count mismatch");
  Tensor out = values;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out.at(r, c) = apply(r, values.at(r, c));
  return out;
}

Tensor NormStats::invert(const Tensor& values) const {
  if (values.rows() != min_.size()) fail(ErrorKind::kDimension, "normalizer row count mismatch");
  Tensor out = values;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out.at(r, c) = invert(r, values.at(r, c));
  return out;
}

Tensor NormStats::invert_rows(const Tensor& values, std::span<const std::size_t> rows) const {
  if (values.rows() != rows.size()) fail(ErrorKind::kDimension, "invert_rows: row count mismatch");
  Tensor out = values;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out.at(r, c) = invert(rows[r], values.at(r, c));
  return out;
}

NormStats fit_normalizer(const RawSeries& raw, std::span<const Instance> train,
                         std::span<const std::size_t> passthrough) {
  if (train.empty()) fail(ErrorKind::kContract, "fit_normalizer: no training instances");
  std::size_t end = 0;
  for (const Instance& inst : train) end = std::max(end, inst.start + inst.x.cols() + inst.y.cols());
  end = std::min(end, raw.length());
  const std::size_t d = raw.features();
  std::vector<double> lo(d), hi(d);
  std::vector<bool> pass(d, false);
  for (std::size_t r : passthrough) pass.at(r) = true;
  for (std::size_t r = 0; r < d; ++r) {
    lo[r] = hi[r] = raw.values.at(r, 0);
    for (std::size_t t = 1; t < end; ++t) {
      lo[r] = std::min(lo[r], raw.values.at(r, t));
      hi[r] = std::max(hi[r], raw.values.at(r, t));
    }
  }
  return NormStats(std::move(lo), std::move(hi), std::move(pass), SplitKind::kTrain);
}

RawSeries normalize(const RawSeries& raw, const NormStats& stats) {
  RawSeries out = raw;
  out.values = stats.apply(raw.values);
  return out;
}

SplitFractions parse_split(const std::string& text) {
  const char sep = text.find(':') != std::string::npos ? ':' : ',';
  const auto parts = split(text, sep);
  if (parts.size() != 3) fail(ErrorKind::kConfig, "split needs three parts, got '" + text + "'");
  double v[3];
  for (int i = 0; i < 3; ++i) v[i] = parse_double(parts[i], "split");
  if (sep == ':') {
    const double total = v[0] + v[1] + v[2];
    if (!(total > 0)) fail(ErrorKind::kConfig, "split ratios must be positive");
    for (double& x : v) x /= total;
  }
  return {v[0], v[1], v[2]};
}

Splits chronological_split(std::vector<Instance> instances, SplitFractions f) {
  if (f.train < 0 || f.valid < 0 || f.test < 0 || std::abs(f.train + f.valid + f.test - 1.0) > 1e-9)
    fail(ErrorKind::kConfig, "split fractions must be non-negative and sum to 1");
  const std::size_t n = instances.size();
  const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * f.train + 1e-9));
  const auto n_valid = static_cast<std::size_t>(std::floor(static_cast<double>(n) * f.valid + 1e-9));
  if (n_train == 0 || n_valid == 0 || n_train + n_valid >= n)
    fail(ErrorKind::kConfig, "split of " + std::to_string(n) + " instances leaves a part empty (" +
                                 std::to_string(n_train) + "/" + std::to_string(n_valid) + "/" +
                                 std::to_string(n - std::min(n, n_train + n_valid)) + ")");
  std::sort(instances.begin(), instances.end(),
            [](const Instance& a, const Instance& b) { return a.start < b.start; });
  Splits out;
  auto first = std::make_move_iterator(instances.begin());
  out.train.assign(first, first + static_cast<std::ptrdiff_t>(n_train));
  out.valid.assign(first + static_cast<std::ptrdiff_t>(n_train),
                   first + static_cast<std::ptrdiff_t>(n_train + n_valid));
  out.test.assign(first + static_cast<std::ptrdiff_t>(n_train + n_valid), std::make_move_iterator(instances.end()));
  return out;
}

WindowedDataset make_dataset(const RawSeries& raw, const WindowConfig& window, SplitFractions fractions,
                             std::size_t L_max, HistoryPolicy policy) {
  Splits by_index = chronological_split(segment(raw, window), fractions);
  std::vector<std::size_t> passthrough;
  if (window.classes > 0) passthrough = window.target_rows;
  WindowedDataset out;
  out.stats = fit_normalizer(raw, by_index.train, passthrough);
  out.series = normalize(raw, out.stats);
  out.window = window;
  out.splits = chronological_split(segment(out.series, window), fractions);
  out.L_max = L_max;
  out.policy = policy;
  return out;
}

namespace {

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == "null";
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

bool timestamp_less(const std::string& a, const std::string& b) {
  double x = 0, y = 0;
  auto ra = std::from_chars(a.data(), a.data() + a.size(), x);
  auto rb = std::from_chars(b.data(), b.data() + b.size(), y);
  if (ra.ec == std::errc() && ra.ptr == a.data() + a.size() && rb.ec == std::errc() &&
      rb.ptr == b.data() + b.size())
    return x < y;
  return a < b;
}

}  // namespace

RawSeries load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kFile, "cannot open " + path.string());

  std::vector<std::string> wanted = schema.features;
  for (const auto& t : schema.targets)
    if (std::find(wanted.begin(), wanted.end(), t) == wanted.end()) wanted.push_back(t);
  if (wanted.empty()) fail(ErrorKind::kConfig, "no columns requested from " + path.string());

  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::kParse, path.string() + ": missing header row");
  std::vector<std::string> header = split(line, schema.delimiter);
  for (auto& h : header) h = unquote(h);
  auto column = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    fail(ErrorKind::kConfig, path.string() + ": no column named '" + name + "'");
  };
  std::vector<std::size_t> cols;
  for (const auto& w : wanted) cols.push_back(column(w));
  const bool has_ts = !schema.timestamp.empty();
  const std::size_t ts_col = has_ts ? column(schema.timestamp) : 0;

  std::vector<std::vector<double>> rows(wanted.size());
  std::vector<std::string> stamps;
  std::vector<double> last(wanted.size(), 0.0);
  std::vector<bool> seen(wanted.size(), false);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line, schema.delimiter);
    if (cells.size() != header.size())
      fail(ErrorKind::kParse, path.string() + ": row " + std::to_string(line_no) + " has " +
                                  std::to_string(cells.size()) + " fields, header has " +
                                  std::to_string(header.size()));
    std::vector<double> vals(wanted.size());
    bool drop = false;
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const std::string& cell = cells[cols[j]];
      if (is_missing(cell)) {
        if (schema.missing == MissingPolicy::kDrop || !seen[j]) {
          drop = true;
          continue;
        }
        vals[j] = last[j];
      } else {
        vals[j] = parse_double(cell, path.string() + ": row " + std::to_string(line_no) +
                                         ", column '" + wanted[j] + "'");
      }
    }
    if (drop) continue;
    for (std::size_t j = 0; j < cols.size(); ++j) {
      rows[j].push_back(vals[j]);
      last[j] = vals[j];
      seen[j] = true;
    }
    if (has_ts) {
      const std::string stamp = unquote(cells[ts_col]);
      if (!stamps.empty() && !timestamp_less(stamps.back(), stamp))
        fail(ErrorKind::kData, path.string() + ": row " + std::to_string(line_no) +
                                   ": timestamps are not strictly increasing");
      stamps.push_back(stamp);
    }
  }
  const std::size_t n = rows.front().size();
  if (n == 0) fail(ErrorKind::kData, path.string() + ": no usable rows");
  RawSeries out;
  out.values = Tensor(Shape{wanted.size(), n});
  for (std::size_t j = 0; j < wanted.size(); ++j)
    for (std::size_t t = 0; t < n; ++t) out.values.at(j, t) = rows[j][t];
  out.names = wanted;
  out.timestamps = std::move(stamps);
  return out;
}

void write_csv(const RawSeries& series, const std::filesystem::path& path,
               const std::string& timestamp_name) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kFile, "cannot open " + path.string() + " for writing");
  const bool has_ts = !series.timestamps.empty();
  if (has_ts) out << timestamp_name;
  for (std::size_t j = 0; j < series.features(); ++j) {
    if (has_ts || j) out << ',';
    out << (j < series.names.size() ? series.names[j] : "x" + std::to_string(j));
  }
  out << '\n';
  for (std::size_t t = 0; t < series.length(); ++t) {
    if (has_ts) out << series.timestamps[t];
    for (std::size_t j = 0; j < series.features(); ++j) {
      if (has_ts || j) out << ',';
      out << format_double(series.values.at(j, t));
    }
    out << '\n';
  }
  if (!out) fail(ErrorKind::kFile, "write failed for " + path.string());
}

}  // namespace hyperseries
