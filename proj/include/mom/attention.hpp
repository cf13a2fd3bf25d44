// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "mom/autograd.hpp"

MOM_NS_BEGIN


/// Projection weights of one attention layer. Keys and values come from the
/// kv tokens, queries from the query tokens; the value projection maps
/// straight to the output width, so there is no separate output matrix.
struct CrossAttentionParams {
  Parameter w_q;  // [d_q x d_attn]
  Parameter w_k;  // [d_kv x d_attn]
  Parameter w_v;  // [d_kv x d_out]
  std::size_t n_heads = 1;

  /// Xavier-style random init, parameters registered under `prefix`.
  static CrossAttentionParams create(ParamSet& params, const std::string& prefix, std::size_t d_q,
                                     std::size_t d_kv, std::size_t d_attn, std::size_t d_out,
                                     std::size_t n_heads, Rng& rng);
};

/// softmax(Q K^T / sqrt(d_head)) V with Q = q_tokens W_Q, K = kv W_K, V = kv W_V.
/// Accepts [L x d] (single example) or [B x L x d] (batched) tokens.
Var cross_attention(const Var& q_tokens, const Var& kv_tokens, const CrossAttentionParams& params);

MOM_NS_END
