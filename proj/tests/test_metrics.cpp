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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "hyperseries/error.hpp"
#include "hyperseries/metrics.hpp"

using namespace hyperseries;

TEST(Regression, HandValues) {
  const std::vector<double> t = {1, 1}, p = {4, -3};
  EXPECT_DOUBLE_EQ(rmse(p, t), std::sqrt(12.5));
  EXPECT_DOUBLE_EQ(mae(p, t), 3.5);
  EXPECT_EQ(rmse(t, t), 0.0);
  EXPECT_EQ(mae(t, t), 0.0);
  EXPECT_EQ(mape(t, t), 0.0);
  EXPECT_DOUBLE_EQ(mape(std::vector<double>{110}, std::vector<double>{100}), 10.0);
}

TEST(Regression, MapeFloorKeepsZeroTargetsFinite) {
  const double v = mape(std::vector<double>{1}, std::vector<double>{0});
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_DOUBLE_EQ(v, 100.0 / 1e-8);
}

TEST(Regression, Errors) {
  const std::vector<double> empty;
  try {
    rmse(empty, empty);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kContract);
  }
  EXPECT_THROW(mae(std::vector<double>{1}, std::vector<double>{1, 2}), Error);
}

TEST(Regression, PropertiesOnRandomInputs) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 50;
    std::vector<double> p(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = u(rng);
      t[i] = u(rng);
    }
    const double r = rmse(p, t), a = mae(p, t), m = mape(p, t);
    EXPECT_GE(r, a - 1e-15);
    EXPECT_GT(a, 0.0);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<double> ps(n), ts(n);
    for (std::size_t i = 0; i < n; ++i) {
      ps[i] = p[order[i]];
      ts[i] = t[order[i]];
    }
    EXPECT_NEAR(rmse(ps, ts), r, 1e-12);
    EXPECT_NEAR(mae(ps, ts), a, 1e-12);
    EXPECT_NEAR(mape(ps, ts), m, 1e-9 * m);
  }
}

TEST(Classification, AllCorrect) {
  const std::vector<std::size_t> y = {0, 1, 2, 2, 1};
  const ClassificationScores s = classification_scores(y, y, 3);
  EXPECT_EQ(s.accuracy, 1.0);
  EXPECT_EQ(s.precision, 1.0);
  EXPECT_EQ(s.recall, 1.0);
  EXPECT_EQ(s.f1, 1.0);
}

TEST(Classification, BinaryConstantPredictor) {
  const std::vector<std::size_t> pred = {0, 0, 0, 0}, target = {0, 1, 0, 1};
  const ClassificationScores s = classification_scores(pred, target, 2);
  EXPECT_DOUBLE_EQ(s.accuracy, 0.5);
  EXPECT_DOUBLE_EQ(s.precision, 0.25);
  EXPECT_DOUBLE_EQ(s.recall, 0.5);
  EXPECT_DOUBLE_EQ(s.f1, 1.0 / 3.0);
}

TEST(Classification, AbsentClassCountsInTheDenominator) {
  const std::vector<std::size_t> y = {0, 1};
  const ClassificationScores s = classification_scores(y, y, 4);
  EXPECT_EQ(s.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(s.precision, 0.5);
  EXPECT_DOUBLE_EQ(s.f1, 0.5);
}

// Per-class counts taken from an explicit confusion matrix.
TEST(Classification, MatchesConfusionMatrixOracle) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 2 + rng() % 4, n = 1 + rng() % 60;
    std::vector<std::size_t> pred(n), target(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = rng() % k;
      target[i] = rng() % k;
    }
    std::vector<std::vector<double>> cm(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < n; ++i) cm[target[i]][pred[i]] += 1;
    double diag = 0, P = 0, R = 0, F = 0;
    for (std::size_t c = 0; c < k; ++c) {
      diag += cm[c][c];
      double col = 0, row = 0;
      for (std::size_t j = 0; j < k; ++j) {
        col += cm[j][c];
        row += cm[c][j];
      }
      const double p = col > 0 ? cm[c][c] / col : 0, r = row > 0 ? cm[c][c] / row : 0;
      P += p;
      R += r;
      F += p + r > 0 ? 2 * p * r / (p + r) : 0;
    }
    const ClassificationScores s = classification_scores(pred, target, k);
    EXPECT_NEAR(s.accuracy, diag / n, 1e-15);
    EXPECT_NEAR(s.precision, P / k, 1e-15);
    EXPECT_NEAR(s.recall, R / k, 1e-15);
    EXPECT_NEAR(s.f1, F / k, 1e-15);
    for (double v : {s.accuracy, s.precision, s.recall, s.f1}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Classification, Errors) {
  const std::vector<std::size_t> a = {0, 3}, b = {0, 1};
  EXPECT_THROW(classification_scores(a, b, 3), Error);
  EXPECT_THROW(classification_scores(b, std::vector<std::size_t>{0}, 3), Error);
  EXPECT_THROW(classification_scores(std::vector<std::size_t>{}, std::vector<std::size_t>{}, 3), Error);
}

TEST(MetricsRecord, CsvAndTable) {
  Metrics m;
  m.count = 3;
  m.rmse = 0.5;
  m.mae = 0.25;
  m.mape = 12.5;
  EXPECT_EQ(m.csv_header(), "count,rmse,mae,mape");
  EXPECT_EQ(m.csv_row(), "3,0.5,0.25,12.5");
  EXPECT_NE(m.table().find("RMSE 0.500000"), std::string::npos);
  m.classification = true;
  m.scores = {1.0, 0.5, 0.25, 0.125};
  EXPECT_EQ(m.csv_header(), "count,acc,precision,recall,f1");
  EXPECT_EQ(m.csv_row(), "3,1,0.5,0.25,0.125");
}
