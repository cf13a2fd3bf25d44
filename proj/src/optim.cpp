// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#include "mom/optim.hpp"

#include <cmath>
#include <numbers>

MOM_NS_BEGIN

AdamW::AdamW(std::vector<Parameter> params, const AdamWConfig& config)
    : params_(std::move(params)), config_(config) {
  if (config.beta1 < 0 || config.beta1 >= 1 || config.beta2 < 0 || config.beta2 >= 1) {
    fail(ErrorKind::Config, "adamw: betas must lie in [0, 1)");
  }
  if (!(config.eps > 0) || config.weight_decay < 0) fail(ErrorKind::Config, "adamw: bad eps or weight decay");
  for (const auto& p : params_) {
    m_.emplace_back(p.value().numel(), 0.0);
    v_.emplace_back(p.value().numel(), 0.0);
  }
}

void AdamW::step(double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, double(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, double(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = params_[i];
    const Tensor& g = p.grad();
    Tensor& w = p.mutable_value();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < w.numel(); ++j) {
      const double gj = g[j];
      m[j] = config_.beta1 * m[j] + (1 - config_.beta1) * gj;
      v[j] = config_.beta2 * v[j] + (1 - config_.beta2) * gj * gj;
      const double mhat = m[j] / bc1, vhat = v[j] / bc2;
      double wj = w[j];
      wj -= lr * config_.weight_decay * wj;
      wj -= lr * mhat / (std::sqrt(vhat) + config_.eps);
      w[j] = static_cast<real>(wj);
    }
  }
}

void AdamW::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

double OneCycle::lr(std::size_t step) const {
  if (total_steps == 0) return max_lr / div_factor;
  const double initial = max_lr / div_factor;
  const double final_lr = initial / final_div_factor;
  const double up = std::max(1.0, pct_start * double(total_steps) - 1.0);
  const double s = double(std::min(step, total_steps - 1));
  auto cos_anneal = [](double a, double b, double frac) {
    return b + (a - b) * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
  };
  if (s <= up) return cos_anneal(initial, max_lr, s / up);
  const double down = std::max(1.0, double(total_steps) - 1.0 - up);
  return cos_anneal(max_lr, final_lr, std::min(1.0, (s - up) / down));
}

double grad_norm(const std::vector<Parameter>& params) {
  double s = 0;
  for (const auto& p : params) {
    const Tensor& g = p.grad();
    for (std::size_t j = 0; j < g.numel(); ++j) s += double(g[j]) * g[j];
  }
  return std::sqrt(s);
}

void clip_grad_norm(std::vector<Parameter>& params, double max_norm) {
  const double n = grad_norm(params);
  if (!(n > max_norm)) return;
  const double c = max_norm / n;
  for (auto& p : params) {
    Tensor& g = p.mutable_grad();
    for (std::size_t j = 0; j < g.numel(); ++j) g[j] = static_cast<real>(g[j] * c);
  }
}

MOM_NS_END
