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
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "hyperseries/error.hpp"

namespace hyperseries {

// Extents per axis. Rank >= 1 and every extent >= 1.
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<std::size_t> dims);
  explicit Shape(std::vector<std::size_t> dims);

  std::size_t rank() const { return dims_.size(); }
  std::size_t operator[](std::size_t axis) const { return dims_[axis]; }
  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t numel() const;
  std::string str() const;

  friend bool operator==(const Shape&, const Shape&) = default;

 private:
  std::vector<std::size_t> dims_;
};

// Dense row-major array of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> values);
  static Tensor scalar(double value) { return vector({value}); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.rank(); }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const { return shape_[0]; }
  std::size_t cols() const { return shape_.rank() > 1 ? shape_[1] : 1; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }

  double item() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

enum class ElementOp { kAdd, kSub, kMul, kSigmoid, kTanh, kExp };

void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

Tensor matvec(const Tensor& m, const Tensor& v);
// m^T v for m [r x c] and v [r].
Tensor matvec_t(const Tensor& m, const Tensor& v);
// a b^T for a [m x n] and b [p x n].
Tensor matmul_nt(const Tensor& a, const Tensor& b);

Tensor elementwise(ElementOp op, const Tensor& a);
Tensor elementwise(ElementOp op, const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor exp(const Tensor& a);

double sigmoid(double x);

std::vector<Tensor> chunk(const Tensor& t, std::size_t parts);
Tensor concat(std::span<const Tensor> parts);
Tensor reshape_to_matrix(const Tensor& t, std::size_t rows, std::size_t cols);
Tensor flatten(const Tensor& t);
Tensor row(const Tensor& m, std::size_t r);
Tensor stack_rows(std::span<const Tensor> rows);
Tensor transpose(const Tensor& m);

// Non-overlapping mean pooling along the time axis (columns); k must divide T.
Tensor avg_pool_1d(const Tensor& x, std::size_t k);

// Max-subtracted softmax over a rank-1 tensor.
Tensor softmax(const Tensor& t);
Tensor log_softmax(const Tensor& t);

double sum(const Tensor& t);
double mean(const Tensor& t);
double dot(const Tensor& a, const Tensor& b);

bool all_finite(const Tensor& t);

}  // namespace hyperseries
