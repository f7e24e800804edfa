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
#include <limits>
#include <random>

#include "hyperseries/autodiff.hpp"
#include "hyperseries/error.hpp"
#include "test_util.hpp"

using namespace hyperseries;
using hyperseries::testing::random_tensor;

namespace {

std::vector<std::string> names_for(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("p" + std::to_string(i));
  return out;
}

// Contracts an arbitrary-shape output with fixed random weights so every
// output coordinate reaches the loss with a distinct coefficient.
Var contract(Var out, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tape& tape = *out.tape();
  Var w = tape.constant(random_tensor(rng, out.shape(), 0.5, 1.5));
  return sum(mul(flatten(out), flatten(w)));
}

}  // namespace

TEST(Tape, ForwardAddsOneNodePerCall) {
  Tape tape;
  Var x = tape.leaf(Tensor::scalar(2));
  Var y = tape.leaf(Tensor::scalar(3));
  const std::size_t before = tape.size();
  const Var inputs[] = {x, y};
  Var z = forward(Op::kAdd, inputs);
  EXPECT_EQ(tape.size(), before + 1);
  EXPECT_EQ(z.value().item(), 5.0);
}

TEST(Tape, ReplayReproducesOutputs) {
  std::mt19937_64 rng(1);
  Tape tape;
  Var m = tape.leaf(random_tensor(rng, Shape{3, 4}));
  Var v = tape.leaf(random_tensor(rng, Shape{4}));
  Var out = softmax(tanh(matvec(m, v)));
  const Tensor first = out.value();
  tape.replay();
  EXPECT_EQ(out.value(), first);
  tape.set_leaf_value(v, Tensor(Shape{4}, 0.0));
  tape.replay();
  for (double p : out.value().values()) EXPECT_DOUBLE_EQ(p, 1.0 / 3.0);
}

TEST(Backward, SquareGradient) {
  Tape tape;
  Var x = tape.leaf(Tensor::scalar(3));
  const GradientMap g = tape.backward(mul(x, x));
  EXPECT_EQ(g[x].item(), 6.0);
}

TEST(Backward, UnreachableVariableGetsZero) {
  Tape tape;
  Var x = tape.leaf(Tensor::scalar(0));
  Var y = tape.leaf(Tensor::vector({1, 2}));
  Var loss = scale(sigmoid(x), 4.0);
  const GradientMap g = tape.backward(loss);
  EXPECT_EQ(g[y], Tensor(Shape{2}, 0.0));
  EXPECT_FALSE(g.touched(y));
  EXPECT_DOUBLE_EQ(g[x].item(), 1.0);
}

TEST(Backward, NonScalarLossIsContractError) {
  Tape tape;
  Var x = tape.leaf(Tensor::vector({1, 2}));
  try {
    (void)tape.backward(tanh(x));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kContract);
  }
}

TEST(Backward, AccumulatesOverReuse) {
  Tape tape;
  Var x = tape.leaf(Tensor::vector({0.3, -0.7}));
  Var loss = sum(add(mul(x, x), tanh(x)));
  const GradientMap g = tape.backward(loss);
  for (std::size_t i = 0; i < 2; ++i) {
    const double v = x.value()[i];
    EXPECT_NEAR(g[x][i], 2 * v + 1 - std::tanh(v) * std::tanh(v), 1e-15);
  }
}

TEST(Backward, GradientShapesMatchAndRepeatIdentically) {
  std::mt19937_64 rng(3);
  Tape tape;
  Var m = tape.leaf(random_tensor(rng, Shape{4, 3}));
  Var b = tape.leaf(random_tensor(rng, Shape{4}));
  Var x = tape.constant(random_tensor(rng, Shape{3}));
  Var loss = mean(square(add(matvec(m, x), b)));
  const GradientMap g1 = tape.backward(loss);
  const GradientMap g2 = tape.backward(loss);
  EXPECT_EQ(g1[m].shape(), m.shape());
  EXPECT_EQ(g1[b].shape(), b.shape());
  EXPECT_EQ(g1[m], g2[m]);
  EXPECT_EQ(g1[b], g2[b]);
}

TEST(Backward, Linearity) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    Tape tape;
    Var p = tape.leaf(random_tensor(rng, Shape{5}));
    Var f = sum(exp(scale(p, 0.5)));
    Var g = sum(square(tanh(p)));
    const double a = 1.7, b = -0.4;
    const GradientMap gf = tape.backward(f);
    const GradientMap gg = tape.backward(g);
    const GradientMap gs = tape.backward(add(scale(f, a), scale(g, b)));
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(gs[p][i], a * gf[p][i] + b * gg[p][i], 1e-12);
  }
}

TEST(GradCheck, RandomThreeLayerComposition) {
  std::mt19937_64 rng(21);
  std::vector<Tensor> params = {random_tensor(rng, Shape{4, 3}), random_tensor(rng, Shape{4}),
                                random_tensor(rng, Shape{4, 4}), random_tensor(rng, Shape{4}),
                                random_tensor(rng, Shape{2, 4}), random_tensor(rng, Shape{2})};
  const Tensor input = random_tensor(rng, Shape{3});
  auto f = [&](Tape& tape, std::span<const Var> p) {
    Var x = tape.constant(input);
    Var h1 = tanh(add(matvec(p[0], x), p[1]));
    Var h2 = sigmoid(add(matvec(p[2], h1), p[3]));
    return sum(exp(add(matvec(p[4], h2), p[5])));
  };
  const auto report = grad_check(f, params, names_for(params.size()), 1e-5, 1e-5);
  EXPECT_TRUE(report.pass) << report.max_rel_err;
  for (const auto& e : report.entries)
    EXPECT_LE(e.max_rel_err, 1e-5) << e.name << "[" << e.worst_index << "] " << e.worst_analytic << " vs "
                                   << e.worst_numeric;
  EXPECT_EQ(report.entries.size(), params.size());
}

TEST(GradCheck, SquareAndConstant) {
  const std::vector<Tensor> x = {Tensor::scalar(2)};
  const auto sq = grad_check([](Tape&, std::span<const Var> p) { return mul(p[0], p[0]); }, x, names_for(1),
                             1e-6, 1e-7);
  EXPECT_TRUE(sq.pass);
  EXPECT_LT(sq.max_rel_err, 1e-7);
  const auto flat = grad_check(
      [](Tape& tape, std::span<const Var> p) { return add(scale(p[0], 0.0), tape.constant(Tensor::scalar(4))); },
      x, names_for(1), 1e-6, 1e-7);
  EXPECT_TRUE(flat.pass);
  EXPECT_EQ(flat.max_rel_err, 0.0);
}

TEST(GradCheck, NonFiniteValueNamesCoordinate) {
  const std::vector<Tensor> x = {Tensor::vector({1.0, 0.0})};
  try {
    grad_check([](Tape&, std::span<const Var> p) { return sum(log(p[0])); }, x, names_for(1), 1e-6, 1e-5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumeric);
  }
  const std::vector<Tensor> y = {Tensor::vector({1.0, 1e-7})};
  try {
    grad_check([](Tape&, std::span<const Var> p) { return sum(log(p[0])); }, y, names_for(1), 1e-6, 1e-5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumeric);
    EXPECT_NE(std::string(e.what()).find("coordinate 1"), std::string::npos) << e.what();
  }
}

TEST(GradCheck, RejectsNonPositiveStep) {
  const std::vector<Tensor> x = {Tensor::scalar(1)};
  auto f = [](Tape&, std::span<const Var> p) { return p[0]; };
  EXPECT_THROW(grad_check(f, x, names_for(1), 0.0, 1e-5), Error);
  EXPECT_THROW(grad_check(f, x, names_for(1), 1e-6, 0.0), Error);
}

// Every differentiable op, checked in isolation.
struct OpCase {
  const char* name;
  std::vector<Shape> shapes;
  std::function<Var(Tape&, std::span<const Var>)> build;
};

class OpGradient : public ::testing::TestWithParam<int> {};

const std::vector<OpCase>& op_cases() {
  static const std::vector<OpCase> cases = {
      {"add", {Shape{3}, Shape{3}}, [](Tape&, std::span<const Var> p) { return add(p[0], p[1]); }},
      {"sub", {Shape{3}, Shape{3}}, [](Tape&, std::span<const Var> p) { return sub(p[0], p[1]); }},
      {"mul", {Shape{2, 2}, Shape{2, 2}}, [](Tape&, std::span<const Var> p) { return mul(p[0], p[1]); }},
      {"scale", {Shape{3}}, [](Tape&, std::span<const Var> p) { return scale(p[0], -1.3); }},
      {"one_minus", {Shape{3}}, [](Tape&, std::span<const Var> p) { return one_minus(p[0]); }},
      {"sigmoid", {Shape{4}}, [](Tape&, std::span<const Var> p) { return sigmoid(p[0]); }},
      {"tanh", {Shape{4}}, [](Tape&, std::span<const Var> p) { return tanh(p[0]); }},
      {"exp", {Shape{4}}, [](Tape&, std::span<const Var> p) { return exp(p[0]); }},
      {"log", {Shape{4}}, [](Tape&, std::span<const Var> p) { return log(add(square(p[0]), p[0].tape()->constant(Tensor(Shape{4}, 1.0)))); }},
      {"square", {Shape{4}}, [](Tape&, std::span<const Var> p) { return square(p[0]); }},
      {"matvec", {Shape{3, 4}, Shape{4}}, [](Tape&, std::span<const Var> p) { return matvec(p[0], p[1]); }},
      {"matvec_t", {Shape{3, 4}, Shape{3}}, [](Tape&, std::span<const Var> p) { return matvec_t(p[0], p[1]); }},
      {"matmul_nt", {Shape{2, 3}, Shape{4, 3}}, [](Tape&, std::span<const Var> p) { return matmul_nt(p[0], p[1]); }},
      {"add_rowwise", {Shape{3, 2}, Shape{2}}, [](Tape&, std::span<const Var> p) { return add_rowwise(p[0], p[1]); }},
      {"chunk", {Shape{6}}, [](Tape&, std::span<const Var> p) { return chunk(p[0], 3)[1]; }},
      {"reshape", {Shape{6}}, [](Tape&, std::span<const Var> p) { return reshape_to_matrix(p[0], 2, 3); }},
      {"flatten", {Shape{2, 3}}, [](Tape&, std::span<const Var> p) { return flatten(p[0]); }},
      {"avg_pool_1d", {Shape{2, 6}}, [](Tape&, std::span<const Var> p) { return avg_pool_1d(p[0], 3); }},
      {"concat", {Shape{2}, Shape{3}}, [](Tape&, std::span<const Var> p) { return concat(p); }},
      {"stack_rows", {Shape{3}, Shape{3}}, [](Tape&, std::span<const Var> p) { return stack_rows(p); }},
      {"row", {Shape{3, 2}}, [](Tape&, std::span<const Var> p) { return row(p[0], 2); }},
      {"transpose", {Shape{3, 2}}, [](Tape&, std::span<const Var> p) { return transpose(p[0]); }},
      {"softmax", {Shape{4}}, [](Tape&, std::span<const Var> p) { return softmax(p[0]); }},
      {"log_softmax", {Shape{4}}, [](Tape&, std::span<const Var> p) { return log_softmax(p[0]); }},
      {"sum", {Shape{2, 2}}, [](Tape&, std::span<const Var> p) { return sum(p[0]); }},
      {"mean", {Shape{5}}, [](Tape&, std::span<const Var> p) { return mean(p[0]); }},
  };
  return cases;
}

TEST_P(OpGradient, MatchesFiniteDifferences) {
  const OpCase& c = op_cases()[static_cast<std::size_t>(GetParam())];
  std::mt19937_64 rng(100 + GetParam());
  std::vector<Tensor> params;
  for (const Shape& s : c.shapes) params.push_back(random_tensor(rng, s, -1.0, 1.0));
  auto f = [&](Tape& tape, std::span<const Var> p) { return contract(c.build(tape, p), 7); };
  const auto report = grad_check(f, params, names_for(params.size()), 1e-6, 1e-6);
  EXPECT_TRUE(report.pass) << c.name << " max_rel_err=" << report.max_rel_err;
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradient, ::testing::Range(0, static_cast<int>(op_cases().size())),
                         [](const ::testing::TestParamInfo<int>& info) {
                           return std::string(op_cases()[static_cast<std::size_t>(info.param)].name);
                         });

TEST(FaultHook, CorruptedBackwardIsDetected) {
  std::mt19937_64 rng(31);
  std::vector<Tensor> params = {random_tensor(rng, Shape{3, 3}), random_tensor(rng, Shape{3})};
  auto f = [](Tape&, std::span<const Var> p) { return sum(tanh(matvec(p[0], p[1]))); };
  set_backward_fault(Op::kMatVec);
  const auto broken = grad_check(f, params, names_for(2), 1e-6, 1e-5);
  set_backward_fault(std::nullopt);
  const auto fixed = grad_check(f, params, names_for(2), 1e-6, 1e-5);
  EXPECT_FALSE(broken.pass);
  EXPECT_TRUE(fixed.pass);
}

TEST(OpNames, RoundTrip) {
  for (int i = 0; i <= static_cast<int>(Op::kMean); ++i) {
    const Op op = static_cast<Op>(i);
    EXPECT_EQ(op_from_name(op_name(op)), op);
  }
  EXPECT_FALSE(op_from_name("no_such_op").has_value());
}
