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

#include "hyperseries/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "hyperseries/error.hpp"
#include "hyperseries/keyvalue.hpp"

namespace hyperseries {

namespace {
void check_pair(std::span<const double> pred, std::span<const double> target, const char* what) {
  if (pred.size() != target.size())
    fail(ErrorKind::kDimension, std::string(what) + ": prediction and target lengths differ");
  if (pred.empty()) fail(ErrorKind::kContract, std::string(what) + ": empty input");
}
}  // namespace

double rmse(std::span<const double> pred, std::span<const double> target) {
  check_pair(pred, target, "rmse");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) acc += (pred[i] - target[i]) * (pred[i] - target[i]);
  return std::sqrt(acc / static_cast<double>(pred.size()));
}

double mae(std::span<const double> pred, std::span<const double> target) {
  check_pair(pred, target, "mae");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) acc += std::abs(pred[i] - target[i]);
  return acc / static_cast<double>(pred.size());
}

double mape(std::span<const double> pred, std::span<const double> target, double floor) {
  check_pair(pred, target, "mape");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    acc += std::abs(pred[i] - target[i]) / std::max(std::abs(target[i]), floor);
  return 100.0 * acc / static_cast<double>(pred.size());
}

ClassificationScores classification_scores(std::span<const std::size_t> pred,
                                           std::span<const std::size_t> target,
                                           std::size_t n_classes) {
  if (pred.size() != target.size())
    fail(ErrorKind::kDimension, "classification_scores: length mismatch");
  if (pred.empty()) fail(ErrorKind::kContract, "classification_scores: empty input");
  if (n_classes == 0) fail(ErrorKind::kContract, "classification_scores: no classes");
  std::vector<std::size_t> tp(n_classes, 0), fp(n_classes, 0), fn(n_classes, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] >= n_classes || target[i] >= n_classes)
      fail(ErrorKind::kContract, "classification_scores: label out of range at " + std::to_string(i));
    if (pred[i] == target[i]) {
      ++correct;
      ++tp[pred[i]];
    } else {
      ++fp[pred[i]];
      ++fn[target[i]];
    }
  }
  ClassificationScores s;
  s.accuracy = static_cast<double>(correct) / static_cast<double>(pred.size());
  for (std::size_t c = 0; c < n_classes; ++c) {
    const double p = tp[c] + fp[c] ? static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fp[c]) : 0.0;
    const double r = tp[c] + fn[c] ? static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fn[c]) : 0.0;
    s.precision += p;
    s.recall += r;
    s.f1 += p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
  }
  const double n = static_cast<double>(n_classes);
  s.precision /= n;
  s.recall /= n;
  s.f1 /= n;
  return s;
}

std::string Metrics::csv_header() const {
  return classification ? "count,acc,precision,recall,f1" : "count,rmse,mae,mape";
}

std::string Metrics::csv_row() const {
  std::string out = std::to_string(count);
  auto push = [&](double v) { out += "," + format_double(v); };
  if (classification) {
    push(scores.accuracy);
    push(scores.precision);
    push(scores.recall);
    push(scores.f1);
  } else {
    push(rmse);
    push(mae);
    push(mape);
  }
  return out;
}

std::string Metrics::table() const {
  char buf[256];
  if (classification)
    std::snprintf(buf, sizeof buf, "  instances %zu\n  ACC  %.6f\n  P    %.6f\n  R    %.6f\n  F1   %.6f\n",
                  count, scores.accuracy, scores.precision, scores.recall, scores.f1);
  else
    std::snprintf(buf, sizeof buf, "  instances %zu\n  RMSE %.6f\n  MAE  %.6f\n  MAPE %.4f%%\n", count, rmse,
                  mae, mape);
  return buf;
}

}  // namespace hyperseries
