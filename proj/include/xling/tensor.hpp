// Copyright 2026 The xling Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "xling/errors.hpp"

namespace xling {

// Dense row-major tensor of doubles with an optional gradient buffer.
// Rank 0 is a scalar (one value), rank 1 a vector, rank 2 a matrix; nothing
// here needs more. 64-bit floats throughout: desk-scale sizes make memory
// irrelevant and the finite-difference checks need the precision.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty, or same length as values
  bool requires_grad = false;

  Tensor() : values(1, 0.0) {}  // scalar zero

  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    values.assign(static_cast<std::size_t>(count(shape)), 0.0);
  }

  Tensor(std::vector<int> s, std::vector<double> v)
      : shape(std::move(s)), values(std::move(v)) {
    if (count(shape) != static_cast<long long>(values.size()))
      throw DimensionError("tensor: shape does not match value count");
  }

  static long long count(const std::vector<int>& s) {
    long long n = 1;
    for (int e : s) {
      if (e <= 0) throw DimensionError("tensor: extents must be positive");
      n *= e;
    }
    return n;
  }

  static Tensor scalar(double v) { return Tensor({}, {v}); }

  static Tensor vector(std::vector<double> v) {
    int n = static_cast<int>(v.size());
    return Tensor({n}, std::move(v));
  }

  static Tensor matrix(int rows, int cols, std::vector<double> v) {
    return Tensor({rows, cols}, std::move(v));
  }

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }

  int rank() const { return static_cast<int>(shape.size()); }
  long long size() const { return static_cast<long long>(values.size()); }
  bool is_scalar() const { return values.size() == 1 && shape.empty(); }

  int rows() const { return rank() == 2 ? shape[0] : 1; }
  int cols() const {
    if (rank() == 2) return shape[1];
    if (rank() == 1) return shape[0];
    return 1;
  }

  double& at(int r, int c) {
    return values[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols()) +
                  static_cast<std::size_t>(c)];
  }
  double at(int r, int c) const {
    return values[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols()) +
                  static_cast<std::size_t>(c)];
  }

  void ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
  }

  void zero_grad() {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
  }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  bool all_finite() const {
    for (double v : values)
      if (!std::isfinite(v)) return false;
    return true;
  }

  double grad_norm() const {
    double s = 0.0;
    for (double g : grad) s += g * g;
    return std::sqrt(s);
  }

  std::string shape_str() const {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) out += "x";
      out += std::to_string(shape[i]);
    }
    return out + "]";
  }
};

}  // namespace xling
