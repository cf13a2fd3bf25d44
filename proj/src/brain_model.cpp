// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#include "mom/brain_model.hpp"

#include <cmath>

#include "mom/ops.hpp"

MOM_NS_BEGIN

void BrainModelConfig::validate() const {
  if (n_voxels == 0 || n_layers == 0 || d_model == 0 || n_tokens == 0 || d_clip == 0 || d_act == 0 ||
      n_classes == 0 || n_heads == 0) {
    fail(ErrorKind::Config, "brain model: all sizes must be positive");
  }
  if (d_model % n_heads != 0) fail(ErrorKind::Config, "brain model: d_model must be divisible by n_heads");
}

BrainModelConfig BrainModelConfig::full_scale() {
  BrainModelConfig c;
  c.n_layers = 24;
  c.d_model = 2048;
  c.n_tokens = 512;
  c.n_voxels = 4096;
  c.d_clip = 1024;
  c.d_act = 768;
  return c;
}

namespace {

Tensor fan_in_init(std::size_t in, std::size_t out, Rng& rng, double gain = 1.0) {
  return Tensor::randn({in, out}, rng, gain / std::sqrt(double(in)));
}

}  // namespace

BrainModel::BrainModel(const BrainModelConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  const std::size_t d = config_.d_model;
  patch_w_ = params_.add("brain.patch.w", fan_in_init(config_.chunk(), d, rng));
  patch_b_ = params_.add("brain.patch.b", Tensor::zeros({d}));
  pos_ = params_.add("brain.pos", Tensor::randn({config_.n_tokens + 1, d}, rng, 0.02));
  global_ = params_.add("brain.global", Tensor::randn({1, d}, rng, 0.02));
  const double resid_gain = 1.0 / std::sqrt(2.0 * double(config_.n_layers));
  for (std::size_t l = 0; l < config_.n_layers; ++l) {
    const std::string p = "brain.block" + std::to_string(l) + ".";
    Block b;
    b.ln1_g = params_.add(p + "ln1.g", Tensor::full({d}, 1));
    b.ln1_b = params_.add(p + "ln1.b", Tensor::zeros({d}));
    b.w_q = params_.add(p + "attn.w_q", fan_in_init(d, d, rng));
    b.w_k = params_.add(p + "attn.w_k", fan_in_init(d, d, rng));
    b.w_v = params_.add(p + "attn.w_v", fan_in_init(d, d, rng));
    b.w_o = params_.add(p + "attn.w_o", fan_in_init(d, d, rng, resid_gain));
    b.ln2_g = params_.add(p + "ln2.g", Tensor::full({d}, 1));
    b.ln2_b = params_.add(p + "ln2.b", Tensor::zeros({d}));
    b.mlp_w1 = params_.add(p + "mlp.w1", fan_in_init(d, 4 * d, rng));
    b.mlp_b1 = params_.add(p + "mlp.b1", Tensor::zeros({4 * d}));
    b.mlp_w2 = params_.add(p + "mlp.w2", fan_in_init(4 * d, d, rng, resid_gain));
    b.mlp_b2 = params_.add(p + "mlp.b2", Tensor::zeros({d}));
    blocks_.push_back(b);
  }
  ln_g_ = params_.add("brain.ln.g", Tensor::full({d}, 1));
  ln_b_ = params_.add("brain.ln.b", Tensor::zeros({d}));
  out_w_ = params_.add("brain.out.w", fan_in_init(d, config_.d_clip, rng));
  out_b_ = params_.add("brain.out.b", Tensor::zeros({config_.d_clip}));
  phi_v_w_ = params_.add("head.image.w", Tensor::identity(config_.d_clip));
  phi_v_b_ = params_.add("head.image.b", Tensor::zeros({config_.d_clip}));
  phi_a_w_ = params_.add("head.action.w", fan_in_init(config_.d_clip, config_.d_act, rng));
  phi_a_b_ = params_.add("head.action.b", Tensor::zeros({config_.d_act}));
  phi_c_w_ = params_.add("head.class.w", fan_in_init(config_.d_clip, config_.n_classes, rng));
  phi_c_b_ = params_.add("head.class.b", Tensor::zeros({config_.n_classes}));
}

EncodedBatch BrainModel::forward(const Var& signals) const {
  if (signals.rank() != 2 || signals.dim(1) != config_.n_voxels) {
    fail(ErrorKind::Dimension, "encode: expected [B x " + std::to_string(config_.n_voxels) + "] signals, got " +
                                   shape_str(signals.shape()));
  }
  const std::size_t batch = signals.dim(0), L = config_.n_tokens, d = config_.d_model;
  const std::size_t padded = L * config_.chunk();
  Var x = signals;
  if (padded > config_.n_voxels) {
    x = ops::concat({x, constant(Tensor::zeros({batch, padded - config_.n_voxels}))}, 1);
  }
  x = ops::linear(ops::reshape(x, {batch, L, config_.chunk()}), patch_w_, patch_b_);
  x = ops::concat({ops::expand(global_.var(), 0, batch), x}, 1);
  x = ops::add(x, ops::expand(pos_.var(), 0, batch));

  for (const Block& b : blocks_) {
    const Var h = ops::layer_norm(x, b.ln1_g, b.ln1_b);
    const Var a = ops::attention(ops::linear(h, b.w_q), ops::linear(h, b.w_k), ops::linear(h, b.w_v),
                                 config_.n_heads);
    x = ops::add(x, ops::linear(a, b.w_o));
    const Var m = ops::gelu(ops::linear(ops::layer_norm(x, b.ln2_g, b.ln2_b), b.mlp_w1, b.mlp_b1));
    x = ops::add(x, ops::linear(m, b.mlp_w2, b.mlp_b2));
  }
  x = ops::layer_norm(x, ln_g_, ln_b_);

  EncodedBatch out;
  out.global_token = ops::linear(ops::reshape(ops::slice(x, 1, 0, 1), {batch, d}), out_w_, out_b_);
  out.embedding = ops::slice(x, 1, 1, L);
  return out;
}

BrainEncoding BrainModel::encode(std::span<const real> signal) const {
  if (signal.size() != config_.n_voxels) {
    fail(ErrorKind::Dimension, "encode: signal length " + std::to_string(signal.size()) + " != n_voxels " +
                                   std::to_string(config_.n_voxels));
  }
  NoGradGuard guard;
  const Tensor s({1, signal.size()}, std::vector<real>(signal.begin(), signal.end()));
  const EncodedBatch e = forward(constant(s));
  return {e.global_token.value().reshaped({config_.d_clip}),
          e.embedding.value().reshaped({config_.n_tokens, config_.d_model})};
}

Var BrainModel::consolidate_frames(const Var& frames) const {
  if ((frames.rank() != 2 && frames.rank() != 3) || frames.shape().back() != config_.d_clip) {
    fail(ErrorKind::Dimension, "consolidate_frames: expected [F x " + std::to_string(config_.d_clip) +
                                   "] frames, got " + shape_str(frames.shape()));
  }
  return ops::linear(ops::mean_axis(frames, -2), phi_v_w_, phi_v_b_);
}

Tensor BrainModel::consolidate_frames(const Tensor& frames) const {
  NoGradGuard guard;
  return consolidate_frames(constant(frames)).value();
}

Tensor BrainModel::consolidate_frames(const std::vector<Tensor>& frames) const {
  if (frames.empty()) fail(ErrorKind::Empty, "consolidate_frames: no frames");
  Tensor stacked({frames.size(), config_.d_clip});
  for (std::size_t f = 0; f < frames.size(); ++f) {
    require_shape(frames[f], {config_.d_clip}, "consolidate_frames frame");
    std::copy(frames[f].data(), frames[f].data() + config_.d_clip, stacked.row(f).data());
  }
  return consolidate_frames(stacked);
}

Var BrainModel::action_project(const Var& global_token) const {
  return ops::linear(global_token, phi_a_w_, phi_a_b_);
}

Tensor BrainModel::action_project(const Tensor& global_token) const {
  NoGradGuard guard;
  return action_project(constant(global_token)).value();
}

Var BrainModel::classify(const Var& global_token) const { return ops::linear(global_token, phi_c_w_, phi_c_b_); }

Tensor BrainModel::classify(const Tensor& global_token) const {
  NoGradGuard guard;
  return classify(constant(global_token)).value();
}

MOM_NS_END
