// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "mom/attention.hpp"
#include "mom/autograd.hpp"

MOM_NS_BEGIN

struct BrainModelConfig {
  std::size_t n_voxels = 256;
  std::size_t n_layers = 2;
  std::size_t d_model = 32;
  std::size_t n_tokens = 8;  // excludes the global token
  std::size_t d_clip = 64;
  std::size_t d_act = 48;
  std::size_t n_classes = 15;
  std::size_t n_heads = 1;

  /// Voxels per token; the signal is zero-padded up to n_tokens * chunk.
  std::size_t chunk() const { return (n_voxels + n_tokens - 1) / n_tokens; }
  void validate() const;

  /// 24 layers, width 2048, 512 tokens plus the global one.
  static BrainModelConfig full_scale();
};

/// Per-sample encoder output.
struct BrainEncoding {
  Tensor global_token;  // [d_clip]
  Tensor embedding;     // [n_tokens x d_model]
};

/// Batched encoder output that stays on the tape.
struct EncodedBatch {
  Var global_token;  // [B x d_clip]
  Var embedding;     // [B x n_tokens x d_model]
};

/// Transformer encoder over patchified signals plus the three heads that read
/// the global token (action, class) or aggregate frame embeddings (image).
class BrainModel {
 public:
  BrainModel(const BrainModelConfig& config, Rng& rng);

  const BrainModelConfig& config() const { return config_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  /// signals: [B x n_voxels]
  EncodedBatch forward(const Var& signals) const;
  BrainEncoding encode(std::span<const real> signal) const;

  /// Mean over frames then the linear head phi_v. frames: [F x d] or [B x F x d].
  Var consolidate_frames(const Var& frames) const;
  Tensor consolidate_frames(const Tensor& frames) const;
  /// Same, from a list of per-frame vectors; an empty list is an error.
  Tensor consolidate_frames(const std::vector<Tensor>& frames) const;

  /// phi_a: [.. x d_clip] -> [.. x d_act]
  Var action_project(const Var& global_token) const;
  Tensor action_project(const Tensor& global_token) const;
  /// phi_c: [.. x d_clip] -> [.. x n_classes] logits
  Var classify(const Var& global_token) const;
  Tensor classify(const Tensor& global_token) const;

 private:
  struct Block {
    Parameter ln1_g, ln1_b, w_q, w_k, w_v, w_o;
    Parameter ln2_g, ln2_b, mlp_w1, mlp_b1, mlp_w2, mlp_b2;
  };

  BrainModelConfig config_;
  ParamSet params_;
  Parameter patch_w_, patch_b_, pos_, global_;
  std::vector<Block> blocks_;
  Parameter ln_g_, ln_b_, out_w_, out_b_;
  Parameter phi_v_w_, phi_v_b_, phi_a_w_, phi_a_b_, phi_c_w_, phi_c_b_;
};

MOM_NS_END
