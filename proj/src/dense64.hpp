// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

// Small row-major double matrices for losses that run their whole forward and
// backward pass in 64 bits and round only the results.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "mom/tensor.hpp"

MOM_NS_BEGIN
namespace dense64 {

struct Mat {
  std::size_t rows = 0, cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return v[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return v[i * cols + j]; }
};

inline Mat from_tensor(const Tensor& t) {
  Mat m(t.dim(0), t.numel() / t.dim(0));
  for (std::size_t i = 0; i < t.numel(); ++i) m.v[i] = t[i];
  return m;
}

/// Unit rows; norms are floored at 1e-12 like ops::l2_normalize.
inline Mat normalize_rows(const Mat& x, std::vector<double>& norms) {
  Mat out(x.rows, x.cols);
  norms.assign(x.rows, 0.0);
  for (std::size_t i = 0; i < x.rows; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < x.cols; ++j) s += x(i, j) * x(i, j);
    norms[i] = std::max(std::sqrt(s), 1e-12);
    for (std::size_t j = 0; j < x.cols; ++j) out(i, j) = x(i, j) / norms[i];
  }
  return out;
}

/// Gradient through row normalization: (g - y (y . g)) / |x|.
inline Mat normalize_backward(const Mat& y, const std::vector<double>& norms, const Mat& g) {
  Mat out(y.rows, y.cols);
  for (std::size_t i = 0; i < y.rows; ++i) {
    double yd = 0;
    if (norms[i] > 1e-12)
      for (std::size_t j = 0; j < y.cols; ++j) yd += y(i, j) * g(i, j);
    for (std::size_t j = 0; j < y.cols; ++j) out(i, j) = (g(i, j) - y(i, j) * yd) / norms[i];
  }
  return out;
}

/// a b^T
inline Mat mul_nt(const Mat& a, const Mat& b) {
  Mat out(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.rows; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < a.cols; ++k) s += a(i, k) * b(j, k);
      out(i, j) = s;
    }
  return out;
}

/// a b
inline Mat mul(const Mat& a, const Mat& b) {
  Mat out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double x = a(i, k);
      for (std::size_t j = 0; j < b.cols; ++j) out(i, j) += x * b(k, j);
    }
  return out;
}

/// a^T b
inline Mat mul_tn(const Mat& a, const Mat& b) {
  Mat out(a.cols, b.cols);
  for (std::size_t k = 0; k < a.rows; ++k)
    for (std::size_t i = 0; i < a.cols; ++i) {
      const double x = a(k, i);
      for (std::size_t j = 0; j < b.cols; ++j) out(i, j) += x * b(k, j);
    }
  return out;
}

/// -mean_i log softmax_j(s[i] / tau)[i] and its gradient with respect to s.
inline double diagonal_nce(const Mat& s, double tau, Mat& grad) {
  const std::size_t n = s.rows;
  grad = Mat(n, s.cols);
  double loss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -INFINITY;
    for (std::size_t j = 0; j < s.cols; ++j) mx = std::max(mx, s(i, j) / tau);
    double z = 0;
    for (std::size_t j = 0; j < s.cols; ++j) z += std::exp(s(i, j) / tau - mx);
    loss -= s(i, i) / tau - mx - std::log(z);
    for (std::size_t j = 0; j < s.cols; ++j) {
      const double p = std::exp(s(i, j) / tau - mx) / z;
      grad(i, j) = (p - (i == j ? 1.0 : 0.0)) / (tau * double(n));
    }
  }
  return loss / double(n);
}

inline void accumulate(Tensor& dst, const Mat& g, double scale) {
  for (std::size_t i = 0; i < dst.numel(); ++i) dst[i] += static_cast<real>(g.v[i] * scale);
}

}  // namespace dense64
MOM_NS_END
