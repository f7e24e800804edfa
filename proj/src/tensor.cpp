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

#include "hyperseries/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hyperseries {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimension: return "dimension error";
    case ErrorKind::kConfig: return "configuration error";
    case ErrorKind::kContract: return "contract error";
    case ErrorKind::kNumeric: return "numeric error";
    case ErrorKind::kData: return "data error";
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kFile: return "file error";
  }
  return "error";
}

Shape::Shape(std::initializer_list<std::size_t> dims)
    : Shape(std::vector<std::size_t>(dims)) {}

Shape::Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) fail(ErrorKind::kDimension, "shape must have rank >= 1");
  std::size_t n = 1;
  for (std::size_t d : dims_) {
    if (d == 0) fail(ErrorKind::kDimension, "shape extent must be >= 1: " + str());
    if (n > std::numeric_limits<std::size_t>::max() / d)
      fail(ErrorKind::kDimension, "shape element count overflows: " + str());
    n *= d;
  }
}

std::size_t Shape::numel() const {
  if (dims_.empty()) return 0;
  std::size_t n = 1;
  for (std::size_t d : dims_) n *= d;
  return n;
}

std::string Shape::str() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (i) os << 'x';
    os << dims_[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_.numel(), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_.numel())
    fail(ErrorKind::kDimension, "data length " + std::to_string(data_.size()) +
                                    " does not match shape " + shape_.str());
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor(Shape{n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> values) {
  return Tensor(Shape{rows, cols}, std::move(values));
}

double Tensor::item() const {
  if (data_.size() != 1)
    fail(ErrorKind::kContract, "item() on non-scalar tensor " + shape_.str());
  return data_[0];
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape())
    fail(ErrorKind::kDimension, std::string(what) + ": shape mismatch " +
                                    a.shape().str() + " vs " + b.shape().str());
}

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank)
    fail(ErrorKind::kDimension, std::string(what) + ": expected rank " +
                                    std::to_string(rank) + ", got " +
                                    t.shape().str());
}

double apply_unary(ElementOp op, double x) {
  switch (op) {
    case ElementOp::kSigmoid: return sigmoid(x);
    case ElementOp::kTanh: return std::tanh(x);
    case ElementOp::kExp: return std::exp(x);
    default: break;
  }
  fail(ErrorKind::kContract, "binary element op used as unary");
}

double apply_binary(ElementOp op, double x, double y) {
  switch (op) {
    case ElementOp::kAdd: return x + y;
    case ElementOp::kSub: return x - y;
    case ElementOp::kMul: return x * y;
    default: break;
  }
  fail(ErrorKind::kContract, "unary element op used as binary");
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor matvec(const Tensor& m, const Tensor& v) {
  require_rank(m, 2, "matvec");
  require_rank(v, 1, "matvec");
  const std::size_t r = m.rows(), c = m.cols();
  if (v.size() != c)
    fail(ErrorKind::kDimension,
         "matvec: inner dimensions disagree " + m.shape().str() + " vs " + v.shape().str());
  Tensor out(Shape{r});
  const double* md = m.data().data();
  const double* vd = v.data().data();
  for (std::size_t i = 0; i < r; ++i) {
    const double* row = md + i * c;
    double acc = 0.0;
    for (std::size_t j = 0; j < c; ++j) acc += row[j] * vd[j];
    out[i] = acc;
  }
  return out;
}

Tensor matvec_t(const Tensor& m, const Tensor& v) {
  require_rank(m, 2, "matvec_t");
  require_rank(v, 1, "matvec_t");
  const std::size_t r = m.rows(), c = m.cols();
  if (v.size() != r)
    fail(ErrorKind::kDimension,
         "matvec_t: outer dimensions disagree " + m.shape().str() + " vs " + v.shape().str());
  Tensor out(Shape{c});
  const double* md = m.data().data();
  for (std::size_t i = 0; i < r; ++i) {
    const double s = v[i];
    const double* row = md + i * c;
    for (std::size_t j = 0; j < c; ++j) out[j] += row[j] * s;
  }
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul_nt");
  require_rank(b, 2, "matmul_nt");
  if (a.cols() != b.cols())
    fail(ErrorKind::kDimension,
         "matmul_nt: inner dimensions disagree " + a.shape().str() + " vs " + b.shape().str());
  const std::size_t m = a.rows(), p = b.rows(), n = a.cols();
  Tensor out(Shape{m, p});
  for (std::size_t i = 0; i < m; ++i) {
    const double* ar = a.data().data() + i * n;
    for (std::size_t j = 0; j < p; ++j) {
      const double* br = b.data().data() + j * n;
      double acc = 0.0;
      for (std::size_t q = 0; q < n; ++q) acc += ar[q] * br[q];
      out.at(i, j) = acc;
    }
  }
  return out;
}

Tensor elementwise(ElementOp op, const Tensor& a) {
  Tensor out = a;
  for (double& x : out.data()) x = apply_unary(op, x);
  return out;
}

Tensor elementwise(ElementOp op, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "elementwise");
  Tensor out = a;
  auto od = out.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] = apply_binary(op, od[i], bd[i]);
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) { return elementwise(ElementOp::kAdd, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(ElementOp::kSub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(ElementOp::kMul, a, b); }
Tensor sigmoid(const Tensor& a) { return elementwise(ElementOp::kSigmoid, a); }
Tensor tanh(const Tensor& a) { return elementwise(ElementOp::kTanh, a); }
Tensor exp(const Tensor& a) { return elementwise(ElementOp::kExp, a); }

Tensor scale(const Tensor& a, double factor) {
  Tensor out = a;
  for (double& x : out.data()) x *= factor;
  return out;
}

std::vector<Tensor> chunk(const Tensor& t, std::size_t parts) {
  require_rank(t, 1, "chunk");
  if (parts == 0 || t.size() % parts != 0)
    fail(ErrorKind::kDimension, "chunk: " + std::to_string(parts) +
                                    " parts do not divide length " +
                                    std::to_string(t.size()));
  const std::size_t n = t.size() / parts;
  std::vector<Tensor> out;
  out.reserve(parts);
  for (std::size_t p = 0; p < parts; ++p) {
    auto first = t.values().begin() + static_cast<std::ptrdiff_t>(p * n);
    out.push_back(Tensor::vector(std::vector<double>(first, first + static_cast<std::ptrdiff_t>(n))));
  }
  return out;
}

Tensor concat(std::span<const Tensor> parts) {
  if (parts.empty()) fail(ErrorKind::kContract, "concat of zero tensors");
  std::vector<double> out;
  for (const Tensor& p : parts) {
    require_rank(p, 1, "concat");
    out.insert(out.end(), p.values().begin(), p.values().end());
  }
  return Tensor::vector(std::move(out));
}

Tensor reshape_to_matrix(const Tensor& t, std::size_t rows, std::size_t cols) {
  if (rows * cols != t.size())
    fail(ErrorKind::kDimension, "reshape: " + t.shape().str() + " cannot become [" +
                                    std::to_string(rows) + "x" + std::to_string(cols) + "]");
  return Tensor(Shape{rows, cols}, t.values());
}

Tensor flatten(const Tensor& t) { return Tensor::vector(t.values()); }

Tensor row(const Tensor& m, std::size_t r) {
  require_rank(m, 2, "row");
  if (r >= m.rows()) fail(ErrorKind::kDimension, "row index out of range for " + m.shape().str());
  auto first = m.values().begin() + static_cast<std::ptrdiff_t>(r * m.cols());
  return Tensor::vector(std::vector<double>(first, first + static_cast<std::ptrdiff_t>(m.cols())));
}

Tensor stack_rows(std::span<const Tensor> rows) {
  if (rows.empty()) fail(ErrorKind::kContract, "stack_rows of zero tensors");
  const std::size_t c = rows.front().size();
  std::vector<double> out;
  out.reserve(rows.size() * c);
  for (const Tensor& r : rows) {
    require_rank(r, 1, "stack_rows");
    if (r.size() != c) fail(ErrorKind::kDimension, "stack_rows: ragged rows");
    out.insert(out.end(), r.values().begin(), r.values().end());
  }
  return Tensor::matrix(rows.size(), c, std::move(out));
}

Tensor transpose(const Tensor& m) {
  require_rank(m, 2, "transpose");
  Tensor out(Shape{m.cols(), m.rows()});
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out.at(j, i) = m.at(i, j);
  return out;
}

Tensor avg_pool_1d(const Tensor& x, std::size_t k) {
  require_rank(x, 2, "avg_pool_1d");
  const std::size_t d = x.rows(), len = x.cols();
  if (k == 0 || k > len)
    fail(ErrorKind::kConfig, "avg_pool_1d: kernel " + std::to_string(k) +
                                 " invalid for length " + std::to_string(len));
  if (len % k != 0)
    fail(ErrorKind::kConfig, "avg_pool_1d: kernel " + std::to_string(k) +
                                 " does not divide length " + std::to_string(len));
  const std::size_t out_len = len / k;
  Tensor out(Shape{d, out_len});
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < out_len; ++j) {
      double acc = 0.0;
      for (std::size_t q = 0; q < k; ++q) acc += x.at(i, j * k + q);
      out.at(i, j) = acc / static_cast<double>(k);
    }
  return out;
}

Tensor softmax(const Tensor& t) {
  require_rank(t, 1, "softmax");
  const double mx = *std::max_element(t.values().begin(), t.values().end());
  Tensor out = t;
  double z = 0.0;
  for (double& x : out.data()) {
    x = std::exp(x - mx);
    z += x;
  }
  for (double& x : out.data()) x /= z;
  return out;
}

Tensor log_softmax(const Tensor& t) {
  require_rank(t, 1, "log_softmax");
  const double mx = *std::max_element(t.values().begin(), t.values().end());
  double z = 0.0;
  for (double x : t.values()) z += std::exp(x - mx);
  const double lz = mx + std::log(z);
  Tensor out = t;
  for (double& x : out.data()) x -= lz;
  return out;
}

double sum(const Tensor& t) {
  double acc = 0.0;
  for (double x : t.values()) acc += x;
  return acc;
}

double mean(const Tensor& t) { return sum(t) / static_cast<double>(t.size()); }

double dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

bool all_finite(const Tensor& t) {
  return std::all_of(t.values().begin(), t.values().end(),
                     [](double x) { return std::isfinite(x); });
}

}  // namespace hyperseries
