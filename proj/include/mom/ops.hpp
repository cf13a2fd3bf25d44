// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "mom/autograd.hpp"

// Differentiable tensor ops. Shapes are checked eagerly and mismatches raise
// ErrorKind::Dimension. "Last axis" ops treat the input as rows of the final
// dimension regardless of rank.

MOM_NS_BEGIN
namespace ops {

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);
/// x[..., d] + bias[d]
Var add_bias(const Var& x, const Var& bias);
/// Multiplies every slice x[r, ...] by s[r]; s has shape [R] or [R x 1].
Var scale_rows(const Var& x, const Var& s);

/// [m x k] * [k x n]
Var matmul(const Var& a, const Var& b);
/// [m x k] * [n x k]^T
Var matmul_nt(const Var& a, const Var& b);
/// x[..., in] * w[in x out] (+ b[out]). `b` may be undefined.
Var linear(const Var& x, const Var& w, const Var& b = Var());

Var softmax(const Var& x, int axis = -1);
Var log_softmax(const Var& x, int axis = -1);
Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps = 1e-5);
Var gelu(const Var& x);
Var sigmoid(const Var& x);
/// Rows of the last axis scaled to unit L2 norm (norm floored at eps).
Var l2_normalize(const Var& x, double eps = 1e-12);

Var sum(const Var& x);
Var mean(const Var& x);
/// Mean over one axis; the axis is removed from the shape.
Var mean_axis(const Var& x, int axis);

Var reshape(const Var& x, Shape shape);
Var slice(const Var& x, int axis, std::size_t start, std::size_t length);
Var concat(const std::vector<Var>& xs, int axis);
/// Inserts a new axis of size n at `axis`, repeating the input along it.
Var expand(const Var& x, int axis, std::size_t n);
/// Diagonal of a square [n x n] matrix.
Var diagonal(const Var& x);
/// out[i] = table[indices[i]] for a table of shape [T x ...].
Var gather_rows(const Var& table, const std::vector<std::size_t>& indices);

/// Scaled dot-product attention on batched tokens.
/// q: [B x Lq x da], k: [B x Lk x da], v: [B x Lk x dv] -> [B x Lq x dv].
/// da and dv are split evenly across heads.
Var attention(const Var& q, const Var& k, const Var& v, std::size_t n_heads = 1);

/// mean((a-b)^2)
Var mse(const Var& a, const Var& b);

/// Mean over all elements of (1-mix)*BCE + mix*focal for sigmoid logits.
/// Probabilities are clamped to [1e-7, 1-1e-7]; the gradient is zero where
/// the clamp is active. Labels must be 0 or 1.
Var sigmoid_focal_bce(const Var& logits, const Tensor& labels, double gamma, double focal_mix);

}  // namespace ops
MOM_NS_END
