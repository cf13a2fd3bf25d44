// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#include "mom/decoder.hpp"

#include <algorithm>
#include <cmath>

#include "mom/ops.hpp"

MOM_NS_BEGIN

NoiseSchedule NoiseSchedule::linear(std::size_t T, double beta_start, double beta_end) {
  if (T == 0) fail(ErrorKind::Schedule, "noise schedule: T must be positive");
  if (!(beta_start > 0 && beta_start < 1 && beta_end > 0 && beta_end < 1)) {
    fail(ErrorKind::Schedule, "noise schedule: betas must lie in (0, 1)");
  }
  if (T > 1 && !(beta_start < beta_end)) fail(ErrorKind::Schedule, "noise schedule: betas must increase");
  NoiseSchedule s;
  double abar = 1.0;
  for (std::size_t i = 0; i < T; ++i) {
    const double b = T == 1 ? beta_start : beta_start + (beta_end - beta_start) * double(i) / double(T - 1);
    s.betas.push_back(b);
    abar *= 1.0 - b;
    s.alpha_bars.push_back(abar);
  }
  return s;
}

void NoiseSchedule::check_timestep(std::size_t t) const {
  if (t < 1 || t > T()) {
    fail(ErrorKind::Schedule, "timestep " + std::to_string(t) + " outside [1, " + std::to_string(T()) + "]");
  }
}

void DecoderConfig::validate() const {
  if (!frames || !channels || !height || !width || !d_cond || !hidden || !n_heads || !timesteps) {
    fail(ErrorKind::Config, "decoder: all sizes must be positive");
  }
  if (hidden % n_heads) fail(ErrorKind::Config, "decoder: hidden must be divisible by n_heads");
}

Tensor add_noise(const Tensor& y0, const Tensor& eps, std::size_t t, const NoiseSchedule& schedule) {
  schedule.check_timestep(t);
  if (y0.shape() != eps.shape()) {
    fail(ErrorKind::Dimension, "add_noise: y0 " + shape_str(y0.shape()) + " vs eps " + shape_str(eps.shape()));
  }
  const double a = std::sqrt(schedule.alpha_bar(t)), b = std::sqrt(1.0 - schedule.alpha_bar(t));
  Tensor out(y0.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = static_cast<real>(a * y0[i] + b * eps[i]);
  return out;
}

std::vector<double> timestep_embedding(std::size_t t, std::size_t dim) {
  std::vector<double> e(dim);
  const std::size_t half = dim / 2;
  for (std::size_t i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * double(i) / double(std::max<std::size_t>(half, 1)));
    e[2 * i] = std::sin(double(t) * freq);
    e[2 * i + 1] = std::cos(double(t) * freq);
  }
  if (dim % 2) e[dim - 1] = std::sin(double(t));
  return e;
}

Denoiser::Denoiser(const DecoderConfig& config, Rng& rng)
    : config_(config), schedule_(NoiseSchedule::linear(config.timesteps, config.beta_start, config.beta_end)) {
  config_.validate();
  const std::size_t h = config_.hidden, px = config_.frame_size();
  auto init = [&](std::size_t in, std::size_t out, double gain = 1.0) {
    return Tensor::randn({in, out}, rng, gain / std::sqrt(double(in)));
  };
  enc_w_ = params_.add("denoiser.enc.w", init(px, h));
  enc_b_ = params_.add("denoiser.enc.b", Tensor::zeros({h}));
  frame_pos_ = params_.add("denoiser.frame_pos", Tensor::randn({config_.frames, h}, rng, 0.02));
  time_w_ = params_.add("denoiser.time.w", init(h, h));
  time_b_ = params_.add("denoiser.time.b", Tensor::zeros({h}));
  attn_ = CrossAttentionParams::create(params_, "denoiser.attn", h, config_.d_cond, h, h, config_.n_heads, rng);
  ln_g_ = params_.add("denoiser.ln.g", Tensor::full({h}, 1));
  ln_b_ = params_.add("denoiser.ln.b", Tensor::zeros({h}));
  mlp_w1_ = params_.add("denoiser.mlp.w1", init(h, 2 * h));
  mlp_b1_ = params_.add("denoiser.mlp.b1", Tensor::zeros({2 * h}));
  mlp_w2_ = params_.add("denoiser.mlp.w2", init(2 * h, h, 0.5));
  mlp_b2_ = params_.add("denoiser.mlp.b2", Tensor::zeros({h}));
  dec_w_ = params_.add("denoiser.dec.w", init(h, px, 0.5));
  dec_b_ = params_.add("denoiser.dec.b", Tensor::zeros({px}));
  skip_ = params_.add("denoiser.skip", Tensor::full({config_.timesteps}, 1));
}

Var Denoiser::forward(const Var& y_t, const Var& cond, const std::vector<std::size_t>& t) const {
  const std::size_t F = config_.frames, px = config_.frame_size(), h = config_.hidden;
  if (y_t.rank() != 3 || y_t.dim(1) != F || y_t.dim(2) != px) {
    fail(ErrorKind::Dimension, "denoise: expected [B x " + std::to_string(F) + " x " + std::to_string(px) +
                                   "] input, got " + shape_str(y_t.shape()));
  }
  const std::size_t B = y_t.dim(0);
  if (cond.rank() != 3 || cond.dim(0) != B || cond.dim(2) != config_.d_cond) {
    fail(ErrorKind::Dimension, "denoise: condition " + shape_str(cond.shape()) + " for batch " + std::to_string(B));
  }
  if (t.size() != B) fail(ErrorKind::Dimension, "denoise: one timestep per batch item required");

  Tensor temb({B, h});
  Tensor inv_noise({B}), signal_coef({B});
  std::vector<std::size_t> t_index(B);
  for (std::size_t b = 0; b < B; ++b) {
    schedule_.check_timestep(t[b]);
    const auto e = timestep_embedding(t[b], h);
    for (std::size_t j = 0; j < h; ++j) temb.at(b, j) = static_cast<real>(e[j]);
    const double abar = schedule_.alpha_bar(t[b]);
    inv_noise[b] = static_cast<real>(1.0 / std::sqrt(1.0 - abar));
    signal_coef[b] = static_cast<real>(std::sqrt(abar / (1.0 - abar)));
    t_index[b] = t[b] - 1;
  }

  Var x = ops::linear(y_t, enc_w_, enc_b_);
  x = ops::add(x, ops::expand(frame_pos_.var(), 0, B));
  x = ops::add(x, ops::expand(ops::linear(constant(temb), time_w_, time_b_), 1, F));
  x = ops::add(x, cross_attention(x, cond, attn_));
  const Var m = ops::gelu(ops::linear(ops::layer_norm(x, ln_g_, ln_b_), mlp_w1_, mlp_b1_));
  x = ops::add(x, ops::linear(m, mlp_w2_, mlp_b2_));
  const Var clean = ops::linear(x, dec_w_, dec_b_);

  const Var skip = ops::scale_rows(ops::scale_rows(y_t, ops::gather_rows(skip_.var(), t_index)),
                                   constant(inv_noise));
  return ops::sub(skip, ops::scale_rows(clean, constant(signal_coef)));
}

Tensor Denoiser::predict(const Tensor& y_t, const Tensor& cond, std::size_t t) const {
  require_shape(y_t, config_.clip_shape(), "denoise input");
  if (cond.rank() != 2) fail(ErrorKind::Dimension, "denoise: condition must be [L x d_cond]");
  NoGradGuard guard;
  const Var out = forward(constant(y_t.reshaped({1, config_.frames, config_.frame_size()})),
                          constant(cond.reshaped({1, cond.dim(0), cond.dim(1)})), {t});
  return out.value().reshaped(config_.clip_shape());
}

Var diffusion_loss(const Denoiser& model, const Var& y0, const Var& cond, const std::vector<std::size_t>& t,
                   const Tensor& eps) {
  if (eps.shape() != y0.shape() || y0.rank() != 3 || t.size() != y0.dim(0)) {
    fail(ErrorKind::Dimension, "diffusion_loss: y0 " + shape_str(y0.shape()) + ", eps " + shape_str(eps.shape()));
  }
  const NoiseSchedule& s = model.schedule();
  const std::size_t B = y0.dim(0);
  Tensor a({B}), b({B});
  for (std::size_t i = 0; i < B; ++i) {
    s.check_timestep(t[i]);
    a[i] = static_cast<real>(std::sqrt(s.alpha_bar(t[i])));
    b[i] = static_cast<real>(std::sqrt(1.0 - s.alpha_bar(t[i])));
  }
  const Var y_t = ops::add(ops::scale_rows(y0, constant(a)), ops::scale_rows(constant(eps), constant(b)));
  return ops::mse(constant(eps), model.forward(y_t, cond, t));
}

Var diffusion_loss(const Denoiser& model, const Var& y0, const Var& cond, Rng& rng) {
  if (y0.rank() != 3) fail(ErrorKind::Dimension, "diffusion_loss: y0 must be [B x F x C*H*W]");
  const std::size_t B = y0.dim(0);
  std::vector<std::size_t> t(B);
  for (auto& ti : t) ti = static_cast<std::size_t>(rng.uniform_int(1, model.schedule().T()));
  const Tensor eps = Tensor::randn(y0.shape(), rng);
  return diffusion_loss(model, y0, cond, t, eps);
}

Tensor sample_with(const NoisePredictor& predict, const Shape& shape, const NoiseSchedule& schedule, Rng& rng) {
  Tensor y = Tensor::randn(shape, rng);
  for (std::size_t t = schedule.T(); t >= 1; --t) {
    const Tensor eps = predict(y, t);
    if (eps.shape() != shape) fail(ErrorKind::Dimension, "sample: predictor returned " + shape_str(eps.shape()));
    const double beta = schedule.beta(t), abar = schedule.alpha_bar(t);
    const double abar_prev = t > 1 ? schedule.alpha_bar(t - 1) : 1.0;
    const double c_eps = beta / std::sqrt(1.0 - abar);
    const double inv_sqrt_alpha = 1.0 / std::sqrt(1.0 - beta);
    const double sigma = t > 1 ? std::sqrt(beta * (1.0 - abar_prev) / (1.0 - abar)) : 0.0;
    for (std::size_t i = 0; i < y.numel(); ++i) {
      double v = inv_sqrt_alpha * (double(y[i]) - c_eps * eps[i]);
      if (t > 1) v += sigma * rng.normal();
      if (!std::isfinite(v)) {
        fail(ErrorKind::Sampling, "sample: non-finite value at timestep " + std::to_string(t));
      }
      y[i] = static_cast<real>(v);
    }
  }
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] = std::clamp(y[i], real(-1), real(1));
  return y;
}

Tensor sample(const Denoiser& model, const Tensor& cond, Rng& rng) {
  return sample_with([&](const Tensor& y_t, std::size_t t) { return model.predict(y_t, cond, t); },
                     model.config().clip_shape(), model.schedule(), rng);
}

Stage2Terms stage2_loss(const Stage1Inputs& s1, const Stage1Weights& w1, const Var& diffusion, const Var& route,
                        const Stage2Weights& w2) {
  if (w2.stage1 < 0 || w2.diffusion < 0 || w2.route < 0) fail(ErrorKind::Config, "stage-2 weights must be >= 0");
  Stage2Terms t;
  t.stage1 = stage1_loss(s1, w1);
  t.diffusion = diffusion.item();
  Var total = ops::add(ops::scale(t.stage1.total, w2.stage1), ops::scale(diffusion, w2.diffusion));
  if (route.defined()) {
    t.route = route.item();
    total = ops::add(total, ops::scale(route, w2.route));
  }
  t.total = total;
  return t;
}

MOM_NS_END
