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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hyperseries/tensor.hpp"

namespace hyperseries {

// Kernels that can be recorded on a tape.
enum class Op : std::uint8_t {
  kLeaf,
  kAdd,
  kSub,
  kMul,
  kScale,     // attrs.s * a
  kOneMinus,  // 1 - a
  kSigmoid,
  kTanh,
  kExp,
  kLog,
  kSquare,
  kMatVec,     // m v
  kMatVecT,    // m^T v
  kMatMulNT,   // a b^T
  kAddRowwise, // m[i, :] + v
  kChunk,      // piece attrs.a of attrs.b
  kReshape,    // to [attrs.a x attrs.b]
  kFlatten,
  kAvgPool1d,  // kernel attrs.a
  kConcat,
  kStackRows,
  kRow,        // row attrs.a of a matrix
  kTranspose,
  kSoftmax,
  kLogSoftmax,
  kSum,
  kMean,
};

const char* op_name(Op op);
std::optional<Op> op_from_name(const std::string& name);

struct OpAttrs {
  std::size_t a = 0;
  std::size_t b = 0;
  double s = 0.0;
};

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Per-node gradients produced by Tape::backward. Nodes that received no
// gradient report zeros of their value's shape.
class GradientMap {
 public:
  Tensor operator[](Var v) const;
  bool touched(Var v) const { return v.id() < grads_.size() && grads_[v.id()].size() != 0; }

 private:
  friend class Tape;
  const Tape* tape_ = nullptr;
  std::vector<Tensor> grads_;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad = true);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  // Evaluates op on the inputs and appends the node.
  Var record(Op op, std::span<const Var> inputs, OpAttrs attrs = {});

  std::size_t size() const { return nodes_.size(); }
  const Tensor& value(Var v) const { return nodes_[v.id()].value; }
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }

  // Reverse sweep from a scalar loss. Leaves the tape untouched.
  GradientMap backward(Var loss) const;

  // Overwrites a leaf value; call replay() afterwards to refresh dependents.
  void set_leaf_value(Var leaf, Tensor value);
  // Re-evaluates every non-leaf node in recorded order.
  void replay();

 private:
  struct Node {
    Op op;
    std::vector<std::size_t> inputs;
    OpAttrs attrs;
    Tensor value;
    bool requires_grad;
  };

  Tensor evaluate(const Node& node) const;
  void propagate(const Node& node, const Tensor& g, std::vector<Tensor>& grads) const;

  std::vector<Node> nodes_;
};

Var forward(Op op, std::span<const Var> inputs, OpAttrs attrs = {});

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var one_minus(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
Var matvec(Var m, Var v);
Var matvec_t(Var m, Var v);
Var matmul_nt(Var a, Var b);
Var add_rowwise(Var m, Var v);
std::vector<Var> chunk(Var t, std::size_t parts);
Var reshape_to_matrix(Var t, std::size_t rows, std::size_t cols);
Var flatten(Var t);
Var avg_pool_1d(Var x, std::size_t k);
Var concat(std::span<const Var> parts);
Var stack_rows(std::span<const Var> rows);
Var row(Var m, std::size_t r);
Var transpose(Var m);
Var softmax(Var t);
Var log_softmax(Var t);
Var sum(Var t);
Var mean(Var t);

// Test hook: perturbs the backward rule of one op so gradient checks can be
// shown to catch a wrong derivative. Pass std::nullopt to restore.
void set_backward_fault(std::optional<Op> op);

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  bool pass = false;
  std::vector<GradCheckEntry> entries;
};

using ScalarFunction = std::function<Var(Tape&, std::span<const Var>)>;

// Compares reverse-mode gradients with central differences
// (f(p+h) - f(p-h)) / 2h, coordinate by coordinate. Relative error uses the
// denominator max(|a|, |b|, 1e-8).
GradCheckReport grad_check(const ScalarFunction& f, std::span<const Tensor> params,
                           std::span<const std::string> names, double h, double tol);

}  // namespace hyperseries
