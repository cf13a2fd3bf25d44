// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "mom/autograd.hpp"

MOM_NS_BEGIN

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// Adam with decoupled weight decay. Moments are kept in double.
class AdamW {
 public:
  AdamW(std::vector<Parameter> params, const AdamWConfig& config = {});

  /// One update with the given learning rate, reading each parameter's grad.
  void step(double lr);
  void zero_grad();
  std::size_t steps_taken() const { return t_; }
  const std::vector<Parameter>& params() const { return params_; }

 private:
  std::vector<Parameter> params_;
  AdamWConfig config_;
  std::vector<std::vector<double>> m_, v_;
  std::size_t t_ = 0;
};

/// One-cycle schedule: cosine warm-up from max_lr/div to max_lr over
/// pct_start of the run, then cosine decay to max_lr/(div*final_div).
struct OneCycle {
  double max_lr = 1e-3;
  std::size_t total_steps = 1;
  double pct_start = 0.3;
  double div_factor = 25.0;
  double final_div_factor = 1e4;

  double lr(std::size_t step) const;
};

/// Global L2 norm of all parameter gradients.
double grad_norm(const std::vector<Parameter>& params);
/// Rescales gradients so their global norm is at most max_norm.
void clip_grad_norm(std::vector<Parameter>& params, double max_norm);

MOM_NS_END
