// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "mom/common.hpp"
#include "mom/rng.hpp"

MOM_NS_BEGIN


using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

/// Dense row-major tensor of `real`. Value type: copies are deep.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, real fill = real(0));
  Tensor(Shape shape, std::vector<real> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, real v) { return Tensor(std::move(shape), v); }
  /// 2-D tensor from nested rows, handy in tests.
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor vector(std::initializer_list<double> values);
  static Tensor identity(std::size_t n);
  static Tensor randn(Shape shape, Rng& rng, double stddev = 1.0);
  static Tensor uniform(Shape shape, Rng& rng, double lo, double hi);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  real* data() { return data_.data(); }
  const real* data() const { return data_.data(); }
  std::span<real> span() { return data_; }
  std::span<const real> span() const { return data_; }
  const std::vector<real>& values() const { return data_; }

  real& operator[](std::size_t i) { return data_[i]; }
  real operator[](std::size_t i) const { return data_[i]; }
  real& at(std::size_t i, std::size_t j) { return data_[i * shape_.back() + j]; }
  real at(std::size_t i, std::size_t j) const { return data_[i * shape_.back() + j]; }

  /// Contiguous slice along the first axis.
  std::span<real> row(std::size_t i);
  std::span<const real> row(std::size_t i) const;
  std::size_t row_size() const;

  Tensor reshaped(Shape shape) const&;
  Tensor reshaped(Shape shape) &&;

  void fill(real v);
  bool all_finite() const;
  bool bitwise_equal(const Tensor& other) const;

 private:
  Shape shape_;
  std::vector<real> data_;
};

double max_abs_diff(const Tensor& a, const Tensor& b);
double l2_norm(std::span<const real> v);
double dot(std::span<const real> a, std::span<const real> b);

/// a·b / (|a||b|). When both norms fall below 1e-12 the result is 0, a
/// warning is logged and `degenerate` (if given) is set.
double cosine_sim(std::span<const real> a, std::span<const real> b, bool* degenerate = nullptr);

void require_shape(const Tensor& t, const Shape& expected, const char* what);

MOM_NS_END
