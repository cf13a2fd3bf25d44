// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#include "mom/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

MOM_NS_BEGIN

namespace {

double evaluate(const LossFn& fn) {
  NoGradGuard guard;
  const Var v = fn();
  return v.item();
}

}  // namespace

GradCheckResult grad_check_against(const LossFn& loss_fn, std::vector<Parameter> params,
                                   const std::vector<Tensor>& analytic, const GradCheckOptions& options) {
  if (analytic.size() != params.size()) fail(ErrorKind::Check, "grad_check: gradient count mismatch");
  const double base = evaluate(loss_fn);
  const double again = evaluate(loss_fn);
  if (std::memcmp(&base, &again, sizeof(double)) != 0) {
    fail(ErrorKind::Check, "grad_check: loss function is not deterministic");
  }

  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = params[pi];
    Tensor& value = p.mutable_value();
    const std::size_t n = value.numel();
    const std::size_t stride =
        options.max_entries_per_param && n > options.max_entries_per_param
            ? (n + options.max_entries_per_param - 1) / options.max_entries_per_param
            : 1;
    for (std::size_t i = 0; i < n; i += stride) {
      const real orig = value[i];
      const real up = static_cast<real>(orig + options.epsilon);
      const real down = static_cast<real>(orig - options.epsilon);
      value[i] = up;
      const double f_up = evaluate(loss_fn);
      value[i] = down;
      const double f_down = evaluate(loss_fn);
      value[i] = orig;
      // Divide by the step actually taken after rounding to `real`.
      const double numeric = (f_up - f_down) / (double(up) - double(down));
      const double a = analytic[pi][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.floor});
      const double rel = std::abs(a - numeric) / denom;
      ++result.entries_checked;
      if (!(rel <= result.max_rel_error)) {
        result.max_rel_error = std::isnan(rel) ? INFINITY : rel;
        result.worst_param = p.name();
        result.worst_index = i;
        result.worst_analytic = a;
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

GradCheckResult grad_check(const LossFn& loss_fn, std::vector<Parameter> params, const GradCheckOptions& options) {
  for (auto& p : params) p.zero_grad();
  {
    const Var loss = loss_fn();
    if (loss.numel() != 1) fail(ErrorKind::Check, "grad_check: loss must be scalar");
    backward(loss);
  }
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (auto& p : params) analytic.push_back(p.grad());
  return grad_check_against(loss_fn, std::move(params), analytic, options);
}

MOM_NS_END
