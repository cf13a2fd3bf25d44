// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mom/autograd.hpp"

// Plain data shared by both precisions.
namespace mom {

struct GradCheckOptions {
  double epsilon = 1e-4;
  /// Denominator floor in |a - n| / max(|a|, |n|, floor).
  double floor = 1e-8;
  /// Check at most this many entries per parameter (evenly strided); 0 = all.
  std::size_t max_entries_per_param = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t entries_checked = 0;
};

}  // namespace mom

MOM_NS_BEGIN

using LossFn = std::function<Var()>;

/// Compares reverse-mode gradients of `loss_fn` with central differences
/// (f(x+e) - f(x-e)) / 2e for every entry of every parameter. The loss must be
/// a deterministic one-element Var; a repeated evaluation that disagrees
/// bitwise raises ErrorKind::Check.
GradCheckResult grad_check(const LossFn& loss_fn, std::vector<Parameter> params,
                           const GradCheckOptions& options = {});

/// Same as above but with an externally supplied analytic gradient, used for
/// fault-injection tests of the checker itself.
GradCheckResult grad_check_against(const LossFn& loss_fn, std::vector<Parameter> params,
                                   const std::vector<Tensor>& analytic, const GradCheckOptions& options = {});

MOM_NS_END
