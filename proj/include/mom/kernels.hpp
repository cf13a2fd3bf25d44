// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>

#include "mom/common.hpp"

// Data-parallel inner loops. Every kernel exists twice: a serial reference
// and an OpenMP version that splits the outermost independent loop across
// threads. Each output element is produced by exactly one thread using the
// same operation order as the serial loop, so both variants are bitwise
// identical; tests assert that directly.
//
// All reductions accumulate in double.

MOM_NS_BEGIN
namespace kernels {

struct GemmArgs {
  const real* a;
  const real* b;
  real* c;
  std::size_t m, n, k;
  bool trans_a = false;  // a is stored [k x m]
  bool trans_b = false;  // b is stored [n x k]
  bool accumulate = false;  // c += a*b instead of c = a*b
};

/// out[i] = cos(query, rows[i]) for a [n x d] row-major block.
struct CosineScanArgs {
  std::span<const real> query;
  const real* rows;
  std::size_t n, d;
  double* out;
};

/// out[i*mb + j] = cos(a_i, b_j).
struct SimilarityArgs {
  const real* a;
  const real* b;
  std::size_t ma, mb, d;
  double* out;
};

/// Local SSIM map over "valid" window positions of two [h x w] images.
struct SsimArgs {
  const double* x;
  const double* y;
  std::size_t h, w;
  std::span<const double> window;  // win x win, sums to 1
  std::size_t win;
  double c1, c2;
  double* out;  // (h-win+1) x (w-win+1)
};

namespace serial {
void gemm(const GemmArgs& args);
void cosine_scan(const CosineScanArgs& args);
void similarity(const SimilarityArgs& args);
void ssim_map(const SsimArgs& args);
}  // namespace serial

namespace parallel {
void gemm(const GemmArgs& args);
void cosine_scan(const CosineScanArgs& args);
void similarity(const SimilarityArgs& args);
void ssim_map(const SsimArgs& args);
}  // namespace parallel

/// Dispatching entry points used by the library: the parallel variant when
/// OpenMP is available and the problem is large enough, serial otherwise.
void gemm(const GemmArgs& args);
void cosine_scan(const CosineScanArgs& args);
void similarity(const SimilarityArgs& args);
void ssim_map(const SsimArgs& args);

bool openmp_enabled();
int max_threads();

}  // namespace kernels
MOM_NS_END
