// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#include "mom/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "mom/rng.hpp"

MOM_NS_BEGIN

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

Tensor::Tensor(Shape shape, real fill) : shape_(std::move(shape)) {
  for (auto d : shape_) {
    if (d == 0) fail(ErrorKind::Dimension, "tensor dims must be positive, got " + shape_str(shape_));
  }
  data_.assign(shape_numel(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<real> data) : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto d : shape_) {
    if (d == 0) fail(ErrorKind::Dimension, "tensor dims must be positive, got " + shape_str(shape_));
  }
  if (shape_numel(shape_) != data_.size()) {
    fail(ErrorKind::Dimension, "tensor data length " + std::to_string(data_.size()) +
                                   " does not match shape " + shape_str(shape_));
  }
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t m = rows.size();
  const std::size_t n = m ? rows.begin()->size() : 0;
  std::vector<real> data;
  data.reserve(m * n);
  for (const auto& r : rows) {
    if (r.size() != n) fail(ErrorKind::Dimension, "from_rows: ragged rows");
    for (double v : r) data.push_back(static_cast<real>(v));
  }
  return Tensor({m, n}, std::move(data));
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  std::vector<real> data;
  for (double v : values) data.push_back(static_cast<real>(v));
  const std::size_t n = data.size();
  return Tensor({n}, std::move(data));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1;
  return t;
}

Tensor Tensor::randn(Shape shape, Rng& rng, double stddev) {
  Tensor t(std::move(shape));
  for (auto& v : t.data_) v = static_cast<real>(stddev * rng.normal());
  return t;
}

Tensor Tensor::uniform(Shape shape, Rng& rng, double lo, double hi) {
  Tensor t(std::move(shape));
  for (auto& v : t.data_) v = static_cast<real>(lo + (hi - lo) * rng.uniform());
  return t;
}

std::size_t Tensor::row_size() const { return shape_.empty() ? 0 : data_.size() / shape_[0]; }

std::span<real> Tensor::row(std::size_t i) {
  const auto n = row_size();
  return std::span<real>(data_).subspan(i * n, n);
}

std::span<const real> Tensor::row(std::size_t i) const {
  const auto n = row_size();
  return std::span<const real>(data_).subspan(i * n, n);
}

Tensor Tensor::reshaped(Shape shape) const& {
  Tensor copy = *this;
  return std::move(copy).reshaped(std::move(shape));
}

Tensor Tensor::reshaped(Shape shape) && {
  if (shape_numel(shape) != data_.size()) {
    fail(ErrorKind::Dimension, "cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  }
  return Tensor(std::move(shape), std::move(data_));
}

void Tensor::fill(real v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](real v) { return std::isfinite(v); });
}

bool Tensor::bitwise_equal(const Tensor& other) const {
  return shape_ == other.shape_ &&
         std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(real)) == 0;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    fail(ErrorKind::Dimension, "max_abs_diff: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  double m = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(double(a[i]) - double(b[i])));
  return m;
}

double dot(std::span<const real> a, std::span<const real> b) {
  if (a.size() != b.size()) fail(ErrorKind::Dimension, "dot: length mismatch");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += double(a[i]) * double(b[i]);
  return s;
}

double l2_norm(std::span<const real> v) { return std::sqrt(dot(v, v)); }

double cosine_sim(std::span<const real> a, std::span<const real> b, bool* degenerate) {
  if (a.size() != b.size()) {
    fail(ErrorKind::Dimension, "cosine_sim: lengths " + std::to_string(a.size()) + " and " +
                                   std::to_string(b.size()));
  }
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += double(a[i]) * double(b[i]);
    aa += double(a[i]) * double(a[i]);
    bb += double(b[i]) * double(b[i]);
  }
  const double na = std::sqrt(aa), nb = std::sqrt(bb);
  if (degenerate) *degenerate = false;
  if (na < 1e-12 && nb < 1e-12) {
    if (degenerate) *degenerate = true;
    log_warn("cosine_sim: both inputs have near-zero norm; returning 0");
    return 0.0;
  }
  if (na < 1e-12 || nb < 1e-12) return 0.0;
  return std::clamp(ab / (na * nb), -1.0, 1.0);
}

void require_shape(const Tensor& t, const Shape& expected, const char* what) {
  if (t.shape() != expected) {
    fail(ErrorKind::Dimension, std::string(what) + ": expected " + shape_str(expected) + ", got " +
                                   shape_str(t.shape()));
  }
}

MOM_NS_END
