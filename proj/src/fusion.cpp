// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#include "mom/fusion.hpp"

#include "mom/ops.hpp"

MOM_NS_BEGIN

Fusion::Fusion(const FusionConfig& config, Rng& rng) : config_(config) {
  const std::size_t d = config_.d_model;
  attn_img = CrossAttentionParams::create(params_, "fusion.attn_img", d, config_.d_clip, d, d, config_.n_heads, rng);
  attn_act = CrossAttentionParams::create(params_, "fusion.attn_act", d, config_.d_act, d, d, config_.n_heads, rng);
  norm_g = params_.add("fusion.norm.g", Tensor::full({d}, 1));
  norm_b = params_.add("fusion.norm.b", Tensor::zeros({d}));
  gate_fmri_w = params_.add("fusion.gate_fmri.w", Tensor::zeros({d, config_.d_clip}));
  gate_fmri_b = params_.add("fusion.gate_fmri.b", Tensor::zeros({config_.d_clip}));
  gate_txt_w = params_.add("fusion.gate_txt.w", Tensor::zeros({config_.d_clip, config_.d_clip}));
  gate_txt_b = params_.add("fusion.gate_txt.b", Tensor::zeros({config_.d_clip}));
}

Var Fusion::attend_memories(const Var& f_e, const Var& image_mems, const Var& action_mems) const {
  if (image_mems.rank() != f_e.rank() || action_mems.rank() != f_e.rank()) {
    fail(ErrorKind::Dimension, "attend_memories: f_e " + shape_str(f_e.shape()) + ", image_mems " +
                                   shape_str(image_mems.shape()) + ", action_mems " +
                                   shape_str(action_mems.shape()));
  }
  return ops::add(cross_attention(f_e, image_mems, attn_img), cross_attention(f_e, action_mems, attn_act));
}

Var Fusion::fuse(const Var& f_e_hat, const Var& text_mem) const {
  const bool batched = f_e_hat.rank() == 3;
  if (text_mem.rank() + 1 != f_e_hat.rank() || (batched && text_mem.dim(0) != f_e_hat.dim(0))) {
    fail(ErrorKind::Dimension, "fuse: f_e_hat " + shape_str(f_e_hat.shape()) + " with text_mem " +
                                   shape_str(text_mem.shape()));
  }
  const std::size_t n_tokens = f_e_hat.dim(f_e_hat.rank() - 2);
  const Var z_f = ops::linear(ops::layer_norm(f_e_hat, norm_g, norm_b), gate_fmri_w, gate_fmri_b);
  const Var z_t = ops::add(ops::linear(text_mem, gate_txt_w, gate_txt_b), text_mem);
  return ops::add(ops::expand(z_t, batched ? 1 : 0, n_tokens), ops::scale(z_f, config_.alpha));
}

Tensor Fusion::attend_memories(const Tensor& f_e, const Tensor& image_mems, const Tensor& action_mems) const {
  NoGradGuard guard;
  return attend_memories(constant(f_e), constant(image_mems), constant(action_mems)).value();
}

Tensor Fusion::fuse(const Tensor& f_e_hat, const Tensor& text_mem) const {
  NoGradGuard guard;
  return fuse(constant(f_e_hat), constant(text_mem)).value();
}

MOM_NS_END
