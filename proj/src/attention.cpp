// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#include "mom/attention.hpp"

#include <cmath>

#include "mom/ops.hpp"
#include "mom/rng.hpp"

MOM_NS_BEGIN

CrossAttentionParams CrossAttentionParams::create(ParamSet& params, const std::string& prefix,
                                                  std::size_t d_q, std::size_t d_kv, std::size_t d_attn,
                                                  std::size_t d_out, std::size_t n_heads, Rng& rng) {
  auto xavier = [&](std::size_t in, std::size_t out) {
    return Tensor::randn({in, out}, rng, std::sqrt(2.0 / double(in + out)));
  };
  CrossAttentionParams p;
  p.w_q = params.add(prefix + ".w_q", xavier(d_q, d_attn));
  p.w_k = params.add(prefix + ".w_k", xavier(d_kv, d_attn));
  p.w_v = params.add(prefix + ".w_v", xavier(d_kv, d_out));
  p.n_heads = n_heads;
  return p;
}

Var cross_attention(const Var& q_tokens, const Var& kv_tokens, const CrossAttentionParams& params) {
  if (q_tokens.rank() != kv_tokens.rank() || (q_tokens.rank() != 2 && q_tokens.rank() != 3)) {
    fail(ErrorKind::Dimension, "cross_attention: query " + shape_str(q_tokens.shape()) + " and kv " +
                                   shape_str(kv_tokens.shape()) + " must both be [L x d] or [B x L x d]");
  }
  const bool batched = q_tokens.rank() == 3;
  const Var q3 = batched ? q_tokens : ops::reshape(q_tokens, {1, q_tokens.dim(0), q_tokens.dim(1)});
  const Var kv3 = batched ? kv_tokens : ops::reshape(kv_tokens, {1, kv_tokens.dim(0), kv_tokens.dim(1)});
  if (q3.dim(0) != kv3.dim(0)) fail(ErrorKind::Dimension, "cross_attention: batch sizes differ");
  const Var q = ops::linear(q3, params.w_q);
  const Var k = ops::linear(kv3, params.w_k);
  const Var v = ops::linear(kv3, params.w_v);
  Var out = ops::attention(q, k, v, params.n_heads);
  if (!batched) out = ops::reshape(out, {out.dim(1), out.dim(2)});
  return out;
}

MOM_NS_END
