// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mom/gradcheck.hpp"

// Named gradient-check cases covering every loss and the attention, fusion,
// encoder and denoiser paths on small random inputs. Both precisions build the
// same registry. All case inputs are drawn in double and rounded through
// float, so a case built with the same seed holds identical values in either
// precision; a snapshot taken in one precision can then be checked with
// finite differences in the other.

namespace mom {

/// Parameter values and analytic gradients of one case evaluation.
struct ParamSnapshot {
  std::string case_name;
  std::uint64_t seed = 0;
  double loss = 0;
  std::vector<std::string> names;
  std::vector<std::vector<double>> values, grads;
};

#define MOM_GRADCASE_API                                                                    \
  std::vector<std::string> grad_case_names();                                               \
  /* Builds the case and runs one backward pass. */                                         \
  ParamSnapshot grad_case_analytic(const std::string& name, std::uint64_t seed);            \
  /* Rebuilds the case, loads the snapshot's values and compares its gradients with */      \
  /* central differences computed in this precision. */                                     \
  GradCheckResult grad_case_check(const ParamSnapshot& snapshot, const GradCheckOptions& options);

namespace f32 {
MOM_GRADCASE_API
}
namespace f64 {
MOM_GRADCASE_API
}

#undef MOM_GRADCASE_API

/// 32-bit analytic gradients against 64-bit finite differences.
inline GradCheckResult grad_case_cross_check(const std::string& name, std::uint64_t seed,
                                             const GradCheckOptions& options = {}) {
  return f64::grad_case_check(f32::grad_case_analytic(name, seed), options);
}

/// Analytic gradients and finite differences both in 64 bits.
inline GradCheckResult grad_case_check64(const std::string& name, std::uint64_t seed,
                                         const GradCheckOptions& options = {}) {
  return f64::grad_case_check(f64::grad_case_analytic(name, seed), options);
}

/// Tolerance of a case in the 32-bit suite: the quadratic self-test is exact
/// up to O(eps^2), everything else is held to 1e-3.
inline double grad_case_tolerance(const std::string& name) { return name == "quadratic" ? 1e-6 : 1e-3; }

struct GradSuiteRow {
  std::string name;
  GradCheckResult result;
  double tolerance = 0;
  bool pass = false;
};

/// Every case, 32-bit analytic against 64-bit differences. With
/// `inject_fault` the first gradient entry of each case is corrupted before
/// the comparison, which must make every row fail.
inline std::vector<GradSuiteRow> grad_suite(std::uint64_t seed, bool inject_fault = false) {
  std::vector<GradSuiteRow> rows;
  for (const auto& name : f32::grad_case_names()) {
    ParamSnapshot snap = f32::grad_case_analytic(name, seed);
    if (inject_fault && !snap.grads.empty() && !snap.grads[0].empty()) {
      double& g = snap.grads[0][0];
      g += 0.01 + 0.1 * std::abs(g);
    }
    GradSuiteRow row{name, f64::grad_case_check(snap, {}), grad_case_tolerance(name)};
    row.pass = row.result.max_rel_error < row.tolerance;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace mom
