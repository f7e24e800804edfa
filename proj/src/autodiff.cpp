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

#include "hyperseries/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

namespace hyperseries {

namespace {

std::atomic<int> g_backward_fault{-1};

constexpr double kFaultFactor = 1.001;

struct OpInfo {
  Op op;
  const char* name;
};

constexpr OpInfo kOps[] = {
    {Op::kLeaf, "leaf"},           {Op::kAdd, "add"},
    {Op::kSub, "sub"},             {Op::kMul, "mul"},
    {Op::kScale, "scale"},         {Op::kOneMinus, "one_minus"},
    {Op::kSigmoid, "sigmoid"},     {Op::kTanh, "tanh"},
    {Op::kExp, "exp"},             {Op::kLog, "log"},
    {Op::kSquare, "square"},       {Op::kMatVec, "matvec"},
    {Op::kMatVecT, "matvec_t"},    {Op::kMatMulNT, "matmul_nt"},
    {Op::kAddRowwise, "add_rowwise"}, {Op::kChunk, "chunk"},
    {Op::kReshape, "reshape"},     {Op::kFlatten, "flatten"},
    {Op::kAvgPool1d, "avg_pool_1d"}, {Op::kConcat, "concat"},
    {Op::kStackRows, "stack_rows"}, {Op::kRow, "row"},
    {Op::kTranspose, "transpose"},
    {Op::kSoftmax, "softmax"},     {Op::kLogSoftmax, "log_softmax"},
    {Op::kSum, "sum"},             {Op::kMean, "mean"},
};

std::size_t arity(Op op) {
  switch (op) {
    case Op::kLeaf: return 0;
    case Op::kAdd:
    case Op::kSub:
    case Op::kMul:
    case Op::kMatVec:
    case Op::kMatVecT:
    case Op::kMatMulNT:
    case Op::kAddRowwise: return 2;
    case Op::kConcat:
    case Op::kStackRows: return 0;  // variadic
    default: return 1;
  }
}

// Adds src into dst, allocating dst as zeros on first touch.
void accumulate(Tensor& dst, const Tensor& like, const Tensor& src) {
  if (dst.size() == 0) {
    dst = src;
    if (dst.shape() != like.shape()) dst = Tensor(like.shape(), src.values());
    return;
  }
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

Tensor& slot(std::vector<Tensor>& grads, std::size_t id, const Tensor& like) {
  Tensor& g = grads[id];
  if (g.size() == 0) g = Tensor(like.shape());
  return g;
}

}  // namespace

const char* op_name(Op op) {
  for (const auto& info : kOps)
    if (info.op == op) return info.name;
  return "unknown";
}

std::optional<Op> op_from_name(const std::string& name) {
  for (const auto& info : kOps)
    if (name == info.name) return info.op;
  return std::nullopt;
}

void set_backward_fault(std::optional<Op> op) {
  g_backward_fault.store(op ? static_cast<int>(*op) : -1);
}

const Tensor& Var::value() const { return tape_->value(*this); }

Tensor GradientMap::operator[](Var v) const {
  if (touched(v)) return grads_[v.id()];
  return Tensor(tape_->value(v).shape());
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  nodes_.push_back(Node{Op::kLeaf, {}, {}, std::move(value), requires_grad});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Op op, std::span<const Var> inputs, OpAttrs attrs) {
  if (op == Op::kLeaf) fail(ErrorKind::kContract, "record: leaves are created with leaf()");
  const std::size_t n = arity(op);
  if (n != 0 && inputs.size() != n)
    fail(ErrorKind::kContract, std::string("record: wrong input count for ") + op_name(op));
  if (inputs.empty()) fail(ErrorKind::kContract, std::string("record: no inputs for ") + op_name(op));
  Node node{op, {}, attrs, {}, false};
  node.inputs.reserve(inputs.size());
  for (const Var& v : inputs) {
    if (v.tape() != this) fail(ErrorKind::kContract, "record: input belongs to another tape");
    node.inputs.push_back(v.id());
    node.requires_grad = node.requires_grad || nodes_[v.id()].requires_grad;
  }
  node.value = evaluate(node);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Tensor Tape::evaluate(const Node& node) const {
  auto in = [&](std::size_t i) -> const Tensor& { return nodes_[node.inputs[i]].value; };
  switch (node.op) {
    case Op::kLeaf: return node.value;
    case Op::kAdd: return hyperseries::add(in(0), in(1));
    case Op::kSub: return hyperseries::sub(in(0), in(1));
    case Op::kMul: return hyperseries::mul(in(0), in(1));
    case Op::kScale: return hyperseries::scale(in(0), node.attrs.s);
    case Op::kOneMinus: {
      Tensor out = in(0);
      for (double& x : out.data()) x = 1.0 - x;
      return out;
    }
    case Op::kSigmoid: return hyperseries::sigmoid(in(0));
    case Op::kTanh: return hyperseries::tanh(in(0));
    case Op::kExp: return hyperseries::exp(in(0));
    case Op::kLog: {
      Tensor out = in(0);
      for (double& x : out.data()) x = std::log(x);
      return out;
    }
    case Op::kSquare: return hyperseries::mul(in(0), in(0));
    case Op::kMatVec: return hyperseries::matvec(in(0), in(1));
    case Op::kMatVecT: return hyperseries::matvec_t(in(0), in(1));
    case Op::kMatMulNT: return hyperseries::matmul_nt(in(0), in(1));
    case Op::kAddRowwise: {
      const Tensor& m = in(0);
      const Tensor& v = in(1);
      if (m.rank() != 2 || v.rank() != 1 || v.size() != m.cols())
        fail(ErrorKind::kDimension,
             "add_rowwise: " + m.shape().str() + " vs " + v.shape().str());
      Tensor out = m;
      for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out.at(i, j) += v[j];
      return out;
    }
    case Op::kChunk: {
      const Tensor& t = in(0);
      const std::size_t parts = node.attrs.b;
      if (t.rank() != 1 || parts == 0 || t.size() % parts != 0 || node.attrs.a >= parts)
        fail(ErrorKind::kDimension, "chunk: " + std::to_string(parts) +
                                        " parts do not divide " + t.shape().str());
      const std::size_t n = t.size() / parts;
      auto first = t.values().begin() + static_cast<std::ptrdiff_t>(node.attrs.a * n);
      return Tensor::vector(std::vector<double>(first, first + static_cast<std::ptrdiff_t>(n)));
    }
    case Op::kReshape: return hyperseries::reshape_to_matrix(in(0), node.attrs.a, node.attrs.b);
    case Op::kFlatten: return hyperseries::flatten(in(0));
    case Op::kAvgPool1d: return hyperseries::avg_pool_1d(in(0), node.attrs.a);
    case Op::kConcat: {
      std::vector<Tensor> parts;
      for (std::size_t i = 0; i < node.inputs.size(); ++i) parts.push_back(in(i));
      return hyperseries::concat(parts);
    }
    case Op::kStackRows: {
      std::vector<Tensor> rows;
      for (std::size_t i = 0; i < node.inputs.size(); ++i) rows.push_back(in(i));
      return hyperseries::stack_rows(rows);
    }
    case Op::kRow: return hyperseries::row(in(0), node.attrs.a);
    case Op::kTranspose: return hyperseries::transpose(in(0));
    case Op::kSoftmax: return hyperseries::softmax(in(0));
    case Op::kLogSoftmax: return hyperseries::log_softmax(in(0));
    case Op::kSum: return Tensor::scalar(hyperseries::sum(in(0)));
    case Op::kMean: return Tensor::scalar(hyperseries::mean(in(0)));
  }
  fail(ErrorKind::kContract, "evaluate: unknown op");
}

void Tape::propagate(const Node& node, const Tensor& g_in, std::vector<Tensor>& grads) const {
  Tensor faulty;
  const Tensor* gp = &g_in;
  if (g_backward_fault.load() == static_cast<int>(node.op)) {
    faulty = hyperseries::scale(g_in, kFaultFactor);
    gp = &faulty;
  }
  const Tensor& g = *gp;
  const Tensor& y = node.value;
  auto in = [&](std::size_t i) -> const Tensor& { return nodes_[node.inputs[i]].value; };
  auto wants = [&](std::size_t i) { return nodes_[node.inputs[i]].requires_grad; };
  auto target = [&](std::size_t i) -> Tensor& { return slot(grads, node.inputs[i], in(i)); };

  switch (node.op) {
    case Op::kLeaf: return;
    case Op::kAdd:
      if (wants(0)) accumulate(grads[node.inputs[0]], in(0), g);
      if (wants(1)) accumulate(grads[node.inputs[1]], in(1), g);
      return;
    case Op::kSub:
      if (wants(0)) accumulate(grads[node.inputs[0]], in(0), g);
      if (wants(1)) accumulate(grads[node.inputs[1]], in(1), hyperseries::scale(g, -1.0));
      return;
    case Op::kMul:
      if (wants(0)) accumulate(grads[node.inputs[0]], in(0), hyperseries::mul(g, in(1)));
      if (wants(1)) accumulate(grads[node.inputs[1]], in(1), hyperseries::mul(g, in(0)));
      return;
    case Op::kScale:
      if (wants(0)) accumulate(grads[node.inputs[0]], in(0), hyperseries::scale(g, node.attrs.s));
      return;
    case Op::kOneMinus:
      if (wants(0)) accumulate(grads[node.inputs[0]], in(0), hyperseries::scale(g, -1.0));
      return;
    case Op::kSigmoid:
    case Op::kTanh:
    case Op::kExp:
    case Op::kLog:
    case Op::kSquare: {
      if (!wants(0)) return;
      Tensor& dst = target(0);
      const Tensor& x = in(0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        double d = 0.0;
        switch (node.op) {
          case Op::kSigmoid: d = y[i] * (1.0 - y[i]); break;
          case Op::kTanh: d = 1.0 - y[i] * y[i]; break;
          case Op::kExp: d = y[i]; break;
          case Op::kLog: d = 1.0 / x[i]; break;
          default: d = 2.0 * x[i]; break;
        }
        dst[i] += g[i] * d;
      }
      return;
    }
    case Op::kMatVec: {
      const Tensor& m = in(0);
      const Tensor& v = in(1);
      const std::size_t r = m.rows(), c = m.cols();
      if (wants(0)) {
        double* gm = target(0).data().data();
        for (std::size_t i = 0; i < r; ++i) {
          const double gi = g[i];
          if (gi == 0.0) continue;
          double* row = gm + i * c;
          for (std::size_t j = 0; j < c; ++j) row[j] += gi * v[j];
        }
      }
      if (wants(1)) {
        Tensor& gv = target(1);
        const double* md = m.data().data();
        for (std::size_t i = 0; i < r; ++i) {
          const double gi = g[i];
          const double* row = md + i * c;
          for (std::size_t j = 0; j < c; ++j) gv[j] += row[j] * gi;
        }
      }
      return;
    }
    case Op::kMatVecT: {
      const Tensor& m = in(0);
      const Tensor& v = in(1);
      const std::size_t r = m.rows(), c = m.cols();
      if (wants(0)) {
        double* gm = target(0).data().data();
        for (std::size_t i = 0; i < r; ++i) {
          double* row = gm + i * c;
          for (std::size_t j = 0; j < c; ++j) row[j] += v[i] * g[j];
        }
      }
      if (wants(1)) {
        Tensor& gv = target(1);
        const double* md = m.data().data();
        for (std::size_t i = 0; i < r; ++i) {
          const double* row = md + i * c;
          double acc = 0.0;
          for (std::size_t j = 0; j < c; ++j) acc += row[j] * g[j];
          gv[i] += acc;
        }
      }
      return;
    }
    case Op::kMatMulNT: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      const std::size_t m = a.rows(), p = b.rows(), n = a.cols();
      if (wants(0)) {
        Tensor& ga = target(0);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < p; ++j) {
            const double gij = g.at(i, j);
            for (std::size_t q = 0; q < n; ++q) ga.at(i, q) += gij * b.at(j, q);
          }
      }
      if (wants(1)) {
        Tensor& gb = target(1);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < p; ++j) {
            const double gij = g.at(i, j);
            for (std::size_t q = 0; q < n; ++q) gb.at(j, q) += gij * a.at(i, q);
          }
      }
      return;
    }
    case Op::kAddRowwise: {
      if (wants(0)) accumulate(grads[node.inputs[0]], in(0), g);
      if (wants(1)) {
        Tensor& gv = target(1);
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < g.cols(); ++j) gv[j] += g.at(i, j);
      }
      return;
    }
    case Op::kChunk: {
      if (!wants(0)) return;
      Tensor& dst = target(0);
      const std::size_t offset = node.attrs.a * g.size();
      for (std::size_t i = 0; i < g.size(); ++i) dst[offset + i] += g[i];
      return;
    }
    case Op::kReshape:
    case Op::kFlatten:
    case Op::kRow: {
      if (!wants(0)) return;
      Tensor& dst = target(0);
      const std::size_t offset = node.op == Op::kRow ? node.attrs.a * in(0).cols() : 0;
      for (std::size_t i = 0; i < g.size(); ++i) dst[offset + i] += g[i];
      return;
    }
    case Op::kTranspose: {
      if (!wants(0)) return;
      Tensor& dst = target(0);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) dst.at(j, i) += g.at(i, j);
      return;
    }
    case Op::kAvgPool1d: {
      if (!wants(0)) return;
      Tensor& dst = target(0);
      const std::size_t k = node.attrs.a;
      const double inv = 1.0 / static_cast<double>(k);
      for (std::size_t d = 0; d < g.rows(); ++d)
        for (std::size_t j = 0; j < g.cols(); ++j)
          for (std::size_t q = 0; q < k; ++q) dst.at(d, j * k + q) += g.at(d, j) * inv;
      return;
    }
    case Op::kConcat:
    case Op::kStackRows: {
      std::size_t offset = 0;
      for (std::size_t i = 0; i < node.inputs.size(); ++i) {
        const std::size_t n = in(i).size();
        if (wants(i)) {
          Tensor& dst = target(i);
          for (std::size_t q = 0; q < n; ++q) dst[q] += g[offset + q];
        }
        offset += n;
      }
      return;
    }
    case Op::kSoftmax: {
      if (!wants(0)) return;
      const double gy = hyperseries::dot(g, y);
      Tensor& dst = target(0);
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += y[i] * (g[i] - gy);
      return;
    }
    case Op::kLogSoftmax: {
      if (!wants(0)) return;
      const double gs = hyperseries::sum(g);
      Tensor& dst = target(0);
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i] - std::exp(y[i]) * gs;
      return;
    }
    case Op::kSum:
    case Op::kMean: {
      if (!wants(0)) return;
      Tensor& dst = target(0);
      const double share =
          node.op == Op::kSum ? g[0] : g[0] / static_cast<double>(dst.size());
      for (double& x : dst.data()) x += share;
      return;
    }
  }
}

GradientMap Tape::backward(Var loss) const {
  if (loss.tape() != this) fail(ErrorKind::kContract, "backward: loss belongs to another tape");
  const Tensor& lv = nodes_[loss.id()].value;
  if (lv.size() != 1)
    fail(ErrorKind::kContract, "backward: loss must be scalar, got " + lv.shape().str());
  GradientMap out;
  out.tape_ = this;
  out.grads_.resize(loss.id() + 1);
  out.grads_[loss.id()] = Tensor(lv.shape(), 1.0);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    const Node& node = nodes_[i];
    if (!node.requires_grad || out.grads_[i].size() == 0) continue;
    propagate(node, out.grads_[i], out.grads_);
  }
  return out;
}

void Tape::set_leaf_value(Var leaf, Tensor value) {
  Node& node = nodes_[leaf.id()];
  if (node.op != Op::kLeaf) fail(ErrorKind::kContract, "set_leaf_value: not a leaf");
  if (node.value.shape() != value.shape())
    fail(ErrorKind::kDimension, "set_leaf_value: shape mismatch " +
                                    node.value.shape().str() + " vs " + value.shape().str());
  node.value = std::move(value);
}

void Tape::replay() {
  for (Node& node : nodes_)
    if (node.op != Op::kLeaf) node.value = evaluate(node);
}

Var forward(Op op, std::span<const Var> inputs, OpAttrs attrs) {
  if (inputs.empty() || !inputs.front().valid())
    fail(ErrorKind::kContract, "forward: missing inputs");
  return inputs.front().tape()->record(op, inputs, attrs);
}

namespace {

Var unary(Op op, Var a, OpAttrs attrs = {}) {
  const Var in[] = {a};
  return forward(op, in, attrs);
}

Var binary(Op op, Var a, Var b) {
  const Var in[] = {a, b};
  return forward(op, in);
}

}  // namespace

Var add(Var a, Var b) { return binary(Op::kAdd, a, b); }
Var sub(Var a, Var b) { return binary(Op::kSub, a, b); }
Var mul(Var a, Var b) { return binary(Op::kMul, a, b); }
Var scale(Var a, double factor) { return unary(Op::kScale, a, {0, 0, factor}); }
Var one_minus(Var a) { return unary(Op::kOneMinus, a); }
Var sigmoid(Var a) { return unary(Op::kSigmoid, a); }
Var tanh(Var a) { return unary(Op::kTanh, a); }
Var exp(Var a) { return unary(Op::kExp, a); }
Var log(Var a) { return unary(Op::kLog, a); }
Var square(Var a) { return unary(Op::kSquare, a); }
Var matvec(Var m, Var v) { return binary(Op::kMatVec, m, v); }
Var matvec_t(Var m, Var v) { return binary(Op::kMatVecT, m, v); }
Var matmul_nt(Var a, Var b) { return binary(Op::kMatMulNT, a, b); }
Var add_rowwise(Var m, Var v) { return binary(Op::kAddRowwise, m, v); }

std::vector<Var> chunk(Var t, std::size_t parts) {
  if (parts == 0 || t.value().rank() != 1 || t.value().size() % parts != 0)
    fail(ErrorKind::kDimension, "chunk: " + std::to_string(parts) +
                                    " parts do not divide " + t.shape().str());
  std::vector<Var> out;
  out.reserve(parts);
  for (std::size_t p = 0; p < parts; ++p) out.push_back(unary(Op::kChunk, t, {p, parts, 0.0}));
  return out;
}

Var reshape_to_matrix(Var t, std::size_t rows, std::size_t cols) {
  return unary(Op::kReshape, t, {rows, cols, 0.0});
}
Var flatten(Var t) { return unary(Op::kFlatten, t); }
Var avg_pool_1d(Var x, std::size_t k) { return unary(Op::kAvgPool1d, x, {k, 0, 0.0}); }
Var concat(std::span<const Var> parts) { return forward(Op::kConcat, parts); }
Var stack_rows(std::span<const Var> rows) { return forward(Op::kStackRows, rows); }
Var row(Var m, std::size_t r) { return unary(Op::kRow, m, {r, 0, 0.0}); }
Var transpose(Var m) { return unary(Op::kTranspose, m); }
Var softmax(Var t) { return unary(Op::kSoftmax, t); }
Var log_softmax(Var t) { return unary(Op::kLogSoftmax, t); }
Var sum(Var t) { return unary(Op::kSum, t); }
Var mean(Var t) { return unary(Op::kMean, t); }

GradCheckReport grad_check(const ScalarFunction& f, std::span<const Tensor> params,
                           std::span<const std::string> names, double h, double tol) {
  if (!(h > 0.0) || !(tol > 0.0))
    fail(ErrorKind::kContract, "grad_check: step and tolerance must be positive");

  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& p : params) vars.push_back(tape.leaf(p));
    Var loss = f(tape, vars);
    if (!std::isfinite(loss.value().item()))
      fail(ErrorKind::kNumeric, "grad_check: non-finite function value at base point");
    GradientMap grads = tape.backward(loss);
    for (const Var& v : vars) analytic.push_back(grads[v]);
  }

  std::vector<Tensor> point(params.begin(), params.end());
  auto evaluate_at = [&](std::size_t which, std::size_t coord) {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& p : point) vars.push_back(tape.leaf(p, false));
    const double value = f(tape, vars).value().item();
    if (!std::isfinite(value))
      fail(ErrorKind::kNumeric, "grad_check: non-finite function value at parameter " +
                                    std::to_string(which) + " coordinate " + std::to_string(coord));
    return value;
  };

  GradCheckReport report;
  for (std::size_t p = 0; p < point.size(); ++p) {
    GradCheckEntry entry;
    entry.name = p < names.size() ? names[p] : "param" + std::to_string(p);
    for (std::size_t i = 0; i < point[p].size(); ++i) {
      const double saved = point[p][i];
      point[p][i] = saved + h;
      const double up = evaluate_at(p, i);
      point[p][i] = saved - h;
      const double down = evaluate_at(p, i);
      point[p][i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[p][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double rel = std::abs(a - numeric) / denom;
      if (rel > entry.max_rel_err) {
        entry.max_rel_err = rel;
        entry.worst_index = i;
        entry.worst_analytic = a;
        entry.worst_numeric = numeric;
      }
    }
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.entries.push_back(std::move(entry));
  }
  report.pass = report.max_rel_err <= tol;
  return report;
}

}  // namespace hyperseries
