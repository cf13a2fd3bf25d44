// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <vector>

#include "mom/attention.hpp"
#include "mom/autograd.hpp"
#include "mom/objectives.hpp"

MOM_NS_BEGIN

/// Linear-beta DDPM schedule with timesteps numbered 1..T.
struct NoiseSchedule {
  std::vector<double> betas;       // betas[t-1]
  std::vector<double> alpha_bars;  // cumulative products, alpha_bars[t-1]

  static NoiseSchedule linear(std::size_t T, double beta_start = 1e-4, double beta_end = 0.02);
  std::size_t T() const { return betas.size(); }
  double beta(std::size_t t) const { return betas.at(t - 1); }
  double alpha_bar(std::size_t t) const { return alpha_bars.at(t - 1); }
  /// Raises ErrorKind::Schedule unless 1 <= t <= T.
  void check_timestep(std::size_t t) const;
};

struct DecoderConfig {
  std::size_t frames = 8, channels = 3, height = 16, width = 16;
  std::size_t d_cond = 64;
  std::size_t hidden = 64;
  std::size_t n_heads = 1;
  std::size_t timesteps = 50;
  double beta_start = 1e-4, beta_end = 0.02;

  std::size_t frame_size() const { return channels * height * width; }
  Shape clip_shape() const { return {frames, channels, height, width}; }
  void validate() const;
};

/// y_t = sqrt(abar_t) y0 + sqrt(1 - abar_t) eps
Tensor add_noise(const Tensor& y0, const Tensor& eps, std::size_t t, const NoiseSchedule& schedule);

/// Sinusoidal embedding of an integer timestep, width `dim`.
std::vector<double> timestep_embedding(std::size_t t, std::size_t dim);

/// Noise predictor. Each frame is flattened and linearly encoded, a learned
/// frame position and the projected timestep embedding are added, one
/// cross-attention block reads the condition tokens, and a linear decoder
/// produces a clean-clip estimate D. The noise estimate is
///   eps = (g[t] * y_t - sqrt(abar_t) * D) / sqrt(1 - abar_t)
/// with a learned per-timestep skip gain g (initialized to 1).
class Denoiser {
 public:
  Denoiser(const DecoderConfig& config, Rng& rng);

  const DecoderConfig& config() const { return config_; }
  const NoiseSchedule& schedule() const { return schedule_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  /// y_t: [B x F x C*H*W], cond: [B x L x d_cond], one timestep per item.
  Var forward(const Var& y_t, const Var& cond, const std::vector<std::size_t>& t) const;
  /// Single clip [F x C x H x W] with condition [L x d_cond].
  Tensor predict(const Tensor& y_t, const Tensor& cond, std::size_t t) const;

 private:
  DecoderConfig config_;
  NoiseSchedule schedule_;
  ParamSet params_;
  Parameter enc_w_, enc_b_, frame_pos_, time_w_, time_b_;
  CrossAttentionParams attn_;
  Parameter ln_g_, ln_b_, mlp_w1_, mlp_b1_, mlp_w2_, mlp_b2_, dec_w_, dec_b_, skip_;
};

/// mean((eps - eps_theta(y_t, cond, t))^2) with explicit t and eps per item.
/// y0 and eps: [B x F x C*H*W].
Var diffusion_loss(const Denoiser& model, const Var& y0, const Var& cond, const std::vector<std::size_t>& t,
                   const Tensor& eps);
/// Same, drawing t uniformly from 1..T and eps from N(0, I) per item.
Var diffusion_loss(const Denoiser& model, const Var& y0, const Var& cond, Rng& rng);

using NoisePredictor = std::function<Tensor(const Tensor& y_t, std::size_t t)>;

/// Ancestral sampling from y_T ~ N(0, I) down to y_0 with posterior variance
/// beta_t (1 - abar_{t-1}) / (1 - abar_t); the result is clamped to [-1, 1].
/// A non-finite intermediate raises ErrorKind::Sampling naming the timestep.
Tensor sample_with(const NoisePredictor& predict, const Shape& shape, const NoiseSchedule& schedule, Rng& rng);
/// cond: [L x d_cond]. Returns [F x C x H x W].
Tensor sample(const Denoiser& model, const Tensor& cond, Rng& rng);

struct Stage2Weights {
  double stage1 = 1.0;
  double diffusion = 1.0;
  /// Weight of the in-batch routing contrastive term (see route_loss).
  double route = 1.0;
  double route_tau = 0.07;
};

struct Stage2Terms {
  Var total;
  Stage1Terms stage1;
  double diffusion = 0, route = 0;
};

/// stage1 * L_stage1 + diffusion * L_diff + route * L_route
Stage2Terms stage2_loss(const Stage1Inputs& s1, const Stage1Weights& w1, const Var& diffusion, const Var& route,
                        const Stage2Weights& w2);

MOM_NS_END
