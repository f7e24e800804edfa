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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "hyperseries/error.hpp"
#include "hyperseries/model.hpp"
#include "test_util.hpp"

using namespace hyperseries;
using hyperseries::testing::random_tensor;

namespace {

ModelConfig small_config(CellKind cell) {
  ModelConfig c;
  c.d_x = 2;
  c.d_y = 1;
  c.d_s = 3;
  c.d_h = 4;
  c.d_v = 2;
  c.d_a = 3;
  c.T = 8;
  c.k = 2;
  c.T_x = 3;
  c.cell = cell;
  return c;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("hyperseries_model_" + name);
}

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void randomize(HyperModel& m, std::mt19937_64& rng) {
  for (auto& e : m.params.entries()) e.value = random_tensor(rng, e.value.shape());
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST(ModelConfig, Validation) {
  ModelConfig c = small_config(CellKind::kHyperGru);
  EXPECT_NO_THROW(c.validate());
  c.k = 3;
  EXPECT_THROW(c.validate(), Error);
  c = small_config(CellKind::kHyperGru);
  c.d_h = 5;
  EXPECT_THROW(c.validate(), Error);
  c = small_config(CellKind::kHyperGru);
  c.T_y = 0;
  EXPECT_THROW(c.validate(), Error);
  c = small_config(CellKind::kHyperGru);
  c.task = Task::kClassification;
  c.d_y = 1;
  EXPECT_THROW(c.validate(), Error);
}

TEST(InitParams, DeterministicInSeed) {
  const ModelConfig c = small_config(CellKind::kHyperGru);
  EXPECT_EQ(init_params(c, 5).params, init_params(c, 5).params);
  EXPECT_NE(init_params(c, 5).params, init_params(c, 6).params);
}

TEST(InitParams, ShapeAuditAndInitRanges) {
  for (CellKind kind : {CellKind::kHyperGru, CellKind::kHyperLstm}) {
    const ModelConfig c = small_config(kind);
    const HyperModel m = init_params(c, 1);
    const std::size_t g = gate_count(kind);
    EXPECT_EQ(m.params["encoder.fwd.w_xr"].shape(), (Shape{2, 2}));
    EXPECT_EQ(m.params["encoder.bwd.w_hn"].shape(), (Shape{2, 2}));
    EXPECT_EQ(m.params["attn.v"].shape(), (Shape{3}));
    EXPECT_EQ(m.params["attn.w_s"].shape(), (Shape{3, 3}));
    EXPECT_EQ(m.params["attn.w_h"].shape(), (Shape{3, 4}));
    EXPECT_EQ(m.params["gen.w_c"].shape(), (Shape{2, 4}));
    EXPECT_EQ(m.params["gen.w_hv"].shape(), (Shape{g * 9, 2}));
    EXPECT_EQ(m.params["gen.w_xv"].shape(), (Shape{g * 6, 2}));
    EXPECT_EQ(m.params["gen.w_bv"].shape(), (Shape{g * 3, 2}));
    EXPECT_EQ(m.params["gen.w_init"].shape(), (Shape{3, 4}));
    EXPECT_EQ(m.params["head.w_out"].shape(), (Shape{1, 3}));
    EXPECT_EQ(m.params.scalar_count(), param_count(c));
    for (const auto& e : m.params.entries()) {
      if (!e.decay) {
        for (double v : e.value.values()) EXPECT_EQ(v, 0.0) << e.name;
        continue;
      }
      const std::size_t fan_in = e.value.rank() == 2 ? e.value.cols() : e.value.size();
      double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      if (e.name == "gen.w_hv" || e.name == "gen.w_xv" || e.name == "gen.w_bv")
        bound /= std::sqrt(static_cast<double>(c.d_v));
      for (double v : e.value.values()) EXPECT_LE(std::abs(v), bound) << e.name;
    }
  }
}

TEST(InitParams, StaticLstmForgetBiasIsOne) {
  const HyperModel m = init_params(small_config(CellKind::kStaticLstm), 1);
  EXPECT_EQ(m.params["cell.b_f"], Tensor(Shape{3}, 1.0));
  EXPECT_EQ(m.params["cell.b_i"], Tensor(Shape{3}, 0.0));
}

TEST(ForwardOne, ZeroParametersGiveZeroOutput) {
  for (CellKind kind : {CellKind::kHyperGru, CellKind::kHyperLstm}) {
    HyperModel m = init_params(small_config(kind), 1);
    for (auto& e : m.params.entries()) e.value = Tensor(e.value.shape());
    std::mt19937_64 rng(3);
    const Tensor y = forward_one(m, random_tensor(rng, Shape{2, 3}), random_tensor(rng, Shape{2, 8}));
    EXPECT_EQ(y, Tensor(Shape{1, 1}));
  }
}

// d_x = d_s = d_v = d_a = 1, d_h = 2 (one unit per direction), T_k = 1, T_x = 1,
// evaluated by scalar arithmetic.
TEST(ForwardOne, ScalarPipelineOracle) {
  ModelConfig c;
  c.d_x = 1;
  c.d_s = 1;
  c.d_h = 2;
  c.d_v = 1;
  c.d_a = 1;
  c.T = 2;
  c.k = 2;
  c.T_x = 1;
  HyperModel m = init_params(c, 1);
  std::mt19937_64 rng(44);
  randomize(m, rng);
  const Tensor x = Tensor::matrix(1, 1, {0.7});
  const Tensor x_hat = Tensor::matrix(1, 2, {0.2, -0.6});
  auto P = [&](const std::string& name, std::size_t i = 0) { return m.params[name][i]; };

  const double xbar = (0.2 + -0.6) / 2.0;
  auto gru1 = [&](const std::string& pre, double in, double s) {
    const double r = sig(P(pre + "w_xr") * in + P(pre + "w_hr") * s + P(pre + "b_r"));
    const double z = sig(P(pre + "w_xz") * in + P(pre + "w_hz") * s + P(pre + "b_z"));
    const double n = std::tanh(P(pre + "w_xn") * in + r * (P(pre + "w_hn") * s + P(pre + "b_n")));
    return (1 - z) * n + z * s;
  };
  const double hf = gru1("encoder.fwd.", xbar, 0.0);
  const double hb = gru1("encoder.bwd.", xbar, 0.0);
  const double s0 = P("gen.w_init", 0) * hf + P("gen.w_init", 1) * hb + P("gen.b_init");
  const double v = P("gen.w_c", 0) * hf + P("gen.w_c", 1) * hb;  // alpha = [1]
  auto gen = [&](const char* name, std::size_t i) { return P(name, i) * v; };
  const double r = sig(gen("gen.w_xv", 0) * 0.7 + gen("gen.w_hv", 0) * s0 + gen("gen.w_bv", 0));
  const double z = sig(gen("gen.w_xv", 1) * 0.7 + gen("gen.w_hv", 1) * s0 + gen("gen.w_bv", 1));
  const double n = std::tanh(gen("gen.w_xv", 2) * 0.7 + r * (gen("gen.w_hv", 2) * s0 + gen("gen.w_bv", 2)));
  const double s1 = (1 - z) * n + z * s0;
  const double want = P("head.w_out") * s1 + P("head.b_out");

  EXPECT_NEAR(forward_one(m, x, x_hat).item(), want, 1e-14);
}

TEST(ForwardOne, ShapeErrorNamesStage) {
  const HyperModel m = init_params(small_config(CellKind::kHyperGru), 1);
  try {
    forward_one(m, Tensor(Shape{2, 3}), Tensor(Shape{2, 7}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimension);
    EXPECT_NE(std::string(e.what()).find("historical window"), std::string::npos) << e.what();
  }
  EXPECT_THROW(forward_one(m, Tensor(Shape{2, 4}), Tensor(Shape{2, 8})), Error);
}

TEST(ForwardOne, OutputShapeIndependentOfHistory) {
  std::mt19937_64 rng(2);
  for (CellKind kind : {CellKind::kHyperGru, CellKind::kHyperLstm, CellKind::kStaticGru, CellKind::kStaticLstm}) {
    ModelConfig c = small_config(kind);
    c.d_y = 2;
    c.T_y = 3;
    const HyperModel m = init_params(c, 4);
    EXPECT_EQ(forward_one(m, random_tensor(rng, Shape{2, 3}), random_tensor(rng, Shape{2, 8})).shape(),
              (Shape{2, 3}));
  }
}

TEST(ForwardAll, OrderDuplicatesAndLocality) {
  std::mt19937_64 rng(7);
  HyperModel m = init_params(small_config(CellKind::kHyperGru), 2);
  randomize(m, rng);
  const Tensor x = random_tensor(rng, Shape{2, 3});
  std::vector<Tensor> windows = {random_tensor(rng, Shape{2, 8}), random_tensor(rng, Shape{2, 8}),
                                 random_tensor(rng, Shape{2, 8})};
  const auto all = forward_all(m, x, windows);
  ASSERT_EQ(all.size(), 3u);
  for (std::size_t n = 0; n < 3; ++n) EXPECT_EQ(all[n], forward_one(m, x, windows[n]));
  EXPECT_EQ(forward_all(m, x, windows, 3), all);

  const std::vector<Tensor> dup = {windows[0], windows[0]};
  const auto two = forward_all(m, x, dup);
  EXPECT_EQ(two[0], two[1]);

  windows[1] = random_tensor(rng, Shape{2, 8});
  const auto changed = forward_all(m, x, windows);
  EXPECT_EQ(changed[0], all[0]);
  EXPECT_EQ(changed[2], all[2]);
  EXPECT_NE(changed[1], all[1]);
  EXPECT_THROW(forward_all(m, x, std::vector<Tensor>{}), Error);
}

TEST(Predict, Modes) {
  std::mt19937_64 rng(9);
  HyperModel m = init_params(small_config(CellKind::kHyperLstm), 2);
  randomize(m, rng);
  const Tensor x = random_tensor(rng, Shape{2, 3});
  const Tensor w1 = random_tensor(rng, Shape{2, 8});
  const Tensor w2 = random_tensor(rng, Shape{2, 8});
  const std::vector<Tensor> single = {w1};
  EXPECT_EQ(predict(m, x, single, PredictMode::kLast), predict(m, x, single, PredictMode::kMean));
  const std::vector<Tensor> same = {w1, w1};
  EXPECT_EQ(predict(m, x, same, PredictMode::kLast), predict(m, x, same, PredictMode::kMean));
  const std::vector<Tensor> two = {w1, w2};
  const double a = forward_one(m, x, w1).item(), b = forward_one(m, x, w2).item();
  EXPECT_DOUBLE_EQ(predict(m, x, two, PredictMode::kMean).item(), (a + b) / 2);
  EXPECT_EQ(predict(m, x, two, PredictMode::kLast).item(), b);
  EXPECT_THROW(predict(m, x, std::vector<Tensor>{}, PredictMode::kLast), Error);
}

TEST(Predict, ClassificationOutputsProbabilities) {
  std::mt19937_64 rng(10);
  ModelConfig c = small_config(CellKind::kHyperGru);
  c.task = Task::kClassification;
  c.d_y = 4;
  HyperModel m = init_params(c, 3);
  randomize(m, rng);
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<Tensor> windows = {random_tensor(rng, Shape{2, 8}, -3, 3)};
    const Tensor p = predict(m, random_tensor(rng, Shape{2, 3}, -3, 3), windows, PredictMode::kLast);
    double total = 0.0;
    for (double v : p.values()) {
      EXPECT_GE(v, 0.0);
      total += v;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(MatchedStatic, ParameterCountIsClosest) {
  const ModelConfig hyper = small_config(CellKind::kHyperGru);
  const ModelConfig base = matched_static_config(hyper, CellKind::kStaticGru);
  const std::size_t target = param_count(hyper);
  auto gap = [&](std::size_t width) {
    ModelConfig c = base;
    c.d_s = width;
    const std::size_t n = param_count(c);
    return n > target ? n - target : target - n;
  };
  EXPECT_LE(gap(base.d_s), gap(base.d_s + 1));
  if (base.d_s > 1) {
    EXPECT_LE(gap(base.d_s), gap(base.d_s - 1));
  }
  EXPECT_THROW(matched_static_config(hyper, CellKind::kHyperLstm), Error);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  for (CellKind kind : {CellKind::kHyperGru, CellKind::kHyperLstm, CellKind::kStaticGru, CellKind::kStaticLstm}) {
    std::mt19937_64 rng(5);
    HyperModel m = init_params(small_config(kind), 77);
    randomize(m, rng);
    const auto path = temp_path(std::string(cell_kind_name(kind)) + ".ckpt");
    save_checkpoint(m, path);
    const HyperModel back = load_checkpoint(path);
    EXPECT_EQ(back.config, m.config);
    EXPECT_EQ(back.seed, m.seed);
    EXPECT_EQ(back.params, m.params);
    std::filesystem::remove(path);
  }
}

TEST(Checkpoint, RejectsCorruptFiles) {
  const auto path = temp_path("bad.ckpt");
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOTACHECKPOINT";
  }
  EXPECT_THROW(load_checkpoint(path), Error);
  const HyperModel m = init_params(small_config(CellKind::kHyperGru), 1);
  save_checkpoint(m, path);
  const std::string bytes = read_bytes(path);
  {
    std::ofstream out(path, std::ios::binary);
    out << bytes.substr(0, bytes.size() / 2);
  }
  EXPECT_THROW(load_checkpoint(path), Error);
  std::filesystem::remove(path);
  try {
    load_checkpoint(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFile);
  }
}

TEST(ExportHidden, RowPerWindowAndDeterministic) {
  std::mt19937_64 rng(12);
  const HyperModel m = init_params(small_config(CellKind::kHyperGru), 1);
  std::vector<Tensor> windows;
  for (int n = 0; n < 128; ++n) windows.push_back(random_tensor(rng, Shape{2, 8}));
  const auto a = temp_path("hidden_a.csv"), b = temp_path("hidden_b.csv");
  export_hidden_states(m, windows, a);
  export_hidden_states(m, windows, b);
  const std::string text = read_bytes(a);
  EXPECT_EQ(text, read_bytes(b));
  std::istringstream lines(text);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "h0,h1,h2,h3");
  std::size_t rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 3);
  }
  EXPECT_EQ(rows, 128u);
  std::filesystem::remove(a);
  std::filesystem::remove(b);
}
