// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mom/attention.hpp"
#include "mom/autograd.hpp"

MOM_NS_BEGIN

struct FusionConfig {
  std::size_t d_model = 32;
  std::size_t d_clip = 64;
  std::size_t d_act = 48;
  std::size_t n_heads = 1;
  double alpha = 1.0;
};

/// Cross-attention from the fMRI tokens into retrieved image and action
/// memories, then the gated merge with the retrieved text embedding. Both
/// gates start at exactly zero, so an untrained module returns the text
/// embedding unchanged at every token position.
class Fusion {
 public:
  Fusion(const FusionConfig& config, Rng& rng);

  const FusionConfig& config() const { return config_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }
  double alpha() const { return config_.alpha; }
  void set_alpha(double a) { config_.alpha = a; }

  /// CrossAttn(f_e; image_mems) + CrossAttn(f_e; action_mems).
  /// f_e: [L x d_model], image_mems: [K x d_clip], action_mems: [K x d_act],
  /// or the same with a leading batch axis.
  Var attend_memories(const Var& f_e, const Var& image_mems, const Var& action_mems) const;

  /// z_t broadcast over tokens plus alpha * z_f, with
  /// z_f = gate_fmri(layer_norm(f_e_hat)) and z_t = gate_txt(text_mem) + text_mem.
  /// f_e_hat: [L x d_model] or [B x L x d_model]; text_mem: [d_clip] or [B x d_clip].
  Var fuse(const Var& f_e_hat, const Var& text_mem) const;

  Tensor attend_memories(const Tensor& f_e, const Tensor& image_mems, const Tensor& action_mems) const;
  /// Returns the fused condition tokens [L x d_clip].
  Tensor fuse(const Tensor& f_e_hat, const Tensor& text_mem) const;

  CrossAttentionParams attn_img, attn_act;
  Parameter norm_g, norm_b, gate_fmri_w, gate_fmri_b, gate_txt_w, gate_txt_b;

 private:
  FusionConfig config_;
  ParamSet params_;
};

MOM_NS_END
