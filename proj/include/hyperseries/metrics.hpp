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
#include <span>
#include <string>

namespace hyperseries {

double rmse(std::span<const double> pred, std::span<const double> target);
double mae(std::span<const double> pred, std::span<const double> target);
// Percentage; |target| is floored at `floor` so zero targets stay finite.
double mape(std::span<const double> pred, std::span<const double> target, double floor = 1e-8);

struct ClassificationScores {
  double accuracy = 0.0;
  double precision = 0.0;  // macro
  double recall = 0.0;     // macro
  double f1 = 0.0;         // macro
};

// Macro averages divide by n_classes; a class with no predictions scores
// precision 0, a class with no targets scores recall 0.
ClassificationScores classification_scores(std::span<const std::size_t> pred,
                                           std::span<const std::size_t> target,
                                           std::size_t n_classes);

struct Metrics {
  bool classification = false;
  std::size_t count = 0;
  double rmse = 0.0;
  double mae = 0.0;
  double mape = 0.0;
  ClassificationScores scores;

  std::string csv_header() const;
  std::string csv_row() const;
  std::string table() const;
};

}  // namespace hyperseries
