// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#include "mom/kernels.hpp"

#include <cmath>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

MOM_NS_BEGIN
namespace kernels {

namespace {

// One output row of C = op(A) * op(B). `bt` is B laid out [k x n] already.
inline void gemm_row(const GemmArgs& g, const real* bt, std::size_t i, double* acc) {
  for (std::size_t j = 0; j < g.n; ++j) acc[j] = 0.0;
  for (std::size_t p = 0; p < g.k; ++p) {
    const double aip = g.trans_a ? g.a[p * g.m + i] : g.a[i * g.k + p];
    const real* brow = bt + p * g.n;
    for (std::size_t j = 0; j < g.n; ++j) acc[j] += aip * static_cast<double>(brow[j]);
  }
  real* crow = g.c + i * g.n;
  if (g.accumulate) {
    for (std::size_t j = 0; j < g.n; ++j) crow[j] = static_cast<real>(crow[j] + acc[j]);
  } else {
    for (std::size_t j = 0; j < g.n; ++j) crow[j] = static_cast<real>(acc[j]);
  }
}

// B in [k x n] layout, transposing when needed.
const real* b_rows(const GemmArgs& g, std::vector<real>& scratch) {
  if (!g.trans_b) return g.b;
  scratch.resize(g.k * g.n);
  for (std::size_t j = 0; j < g.n; ++j)
    for (std::size_t p = 0; p < g.k; ++p) scratch[p * g.n + j] = g.b[j * g.k + p];
  return scratch.data();
}

inline double cosine_row(std::span<const real> q, double qn, const real* row, std::size_t d) {
  double ab = 0, bb = 0;
  for (std::size_t t = 0; t < d; ++t) {
    const double bv = row[t];
    ab += static_cast<double>(q[t]) * bv;
    bb += bv * bv;
  }
  const double nb = std::sqrt(bb);
  if (qn < 1e-12 || nb < 1e-12) return 0.0;
  return ab / (qn * nb);
}

inline double norm_of(const real* v, std::size_t d) {
  double s = 0;
  for (std::size_t t = 0; t < d; ++t) s += static_cast<double>(v[t]) * v[t];
  return std::sqrt(s);
}

inline void similarity_row(const SimilarityArgs& s, const std::vector<double>& nb, std::size_t i) {
  const real* ai = s.a + i * s.d;
  const double na = norm_of(ai, s.d);
  for (std::size_t j = 0; j < s.mb; ++j) {
    const real* bj = s.b + j * s.d;
    double ab = 0;
    for (std::size_t t = 0; t < s.d; ++t) ab += static_cast<double>(ai[t]) * bj[t];
    s.out[i * s.mb + j] = (na < 1e-12 || nb[j] < 1e-12) ? 0.0 : ab / (na * nb[j]);
  }
}

std::vector<double> row_norms(const real* m, std::size_t rows, std::size_t d) {
  std::vector<double> out(rows);
  for (std::size_t j = 0; j < rows; ++j) out[j] = norm_of(m + j * d, d);
  return out;
}

inline void ssim_row(const SsimArgs& s, std::size_t r) {
  const std::size_t ow = s.w - s.win + 1;
  for (std::size_t c = 0; c < ow; ++c) {
    double mx = 0, my = 0, xx = 0, yy = 0, xy = 0;
    for (std::size_t u = 0; u < s.win; ++u) {
      const double* xr = s.x + (r + u) * s.w + c;
      const double* yr = s.y + (r + u) * s.w + c;
      const double* wr = s.window.data() + u * s.win;
      for (std::size_t v = 0; v < s.win; ++v) {
        const double g = wr[v];
        mx += g * xr[v];
        my += g * yr[v];
        xx += g * xr[v] * xr[v];
        yy += g * yr[v] * yr[v];
        xy += g * xr[v] * yr[v];
      }
    }
    const double vx = xx - mx * mx;
    const double vy = yy - my * my;
    const double cov = xy - mx * my;
    s.out[r * ow + c] = ((2 * mx * my + s.c1) * (2 * cov + s.c2)) /
                        ((mx * mx + my * my + s.c1) * (vx + vy + s.c2));
  }
}

constexpr std::size_t kParallelWork = 1 << 15;

}  // namespace

namespace serial {

void gemm(const GemmArgs& g) {
  std::vector<real> scratch;
  const real* bt = b_rows(g, scratch);
  std::vector<double> acc(g.n);
  for (std::size_t i = 0; i < g.m; ++i) gemm_row(g, bt, i, acc.data());
}

void cosine_scan(const CosineScanArgs& s) {
  const double qn = std::sqrt([&] {
    double t = 0;
    for (auto v : s.query) t += static_cast<double>(v) * v;
    return t;
  }());
  for (std::size_t i = 0; i < s.n; ++i) s.out[i] = cosine_row(s.query, qn, s.rows + i * s.d, s.d);
}

void similarity(const SimilarityArgs& s) {
  const auto nb = row_norms(s.b, s.mb, s.d);
  for (std::size_t i = 0; i < s.ma; ++i) similarity_row(s, nb, i);
}

void ssim_map(const SsimArgs& s) {
  const std::size_t oh = s.h - s.win + 1;
  for (std::size_t r = 0; r < oh; ++r) ssim_row(s, r);
}

}  // namespace serial

namespace parallel {

void gemm(const GemmArgs& g) {
  std::vector<real> scratch;
  const real* bt = b_rows(g, scratch);
  const auto m = static_cast<std::ptrdiff_t>(g.m);
#pragma omp parallel
  {
    std::vector<double> acc(g.n);
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < m; ++i) gemm_row(g, bt, static_cast<std::size_t>(i), acc.data());
  }
}

void cosine_scan(const CosineScanArgs& s) {
  double qq = 0;
  for (auto v : s.query) qq += static_cast<double>(v) * v;
  const double qn = std::sqrt(qq);
  const auto n = static_cast<std::ptrdiff_t>(s.n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    s.out[i] = cosine_row(s.query, qn, s.rows + static_cast<std::size_t>(i) * s.d, s.d);
  }
}

void similarity(const SimilarityArgs& s) {
  const auto nb = row_norms(s.b, s.mb, s.d);
  const auto ma = static_cast<std::ptrdiff_t>(s.ma);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < ma; ++i) similarity_row(s, nb, static_cast<std::size_t>(i));
}

void ssim_map(const SsimArgs& s) {
  const auto oh = static_cast<std::ptrdiff_t>(s.h - s.win + 1);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < oh; ++r) ssim_row(s, static_cast<std::size_t>(r));
}

}  // namespace parallel

bool openmp_enabled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {
bool go_parallel(std::size_t work) { return openmp_enabled() && max_threads() > 1 && work >= kParallelWork; }
}  // namespace

void gemm(const GemmArgs& g) {
  if (go_parallel(g.m * g.n * g.k)) parallel::gemm(g);
  else serial::gemm(g);
}

void cosine_scan(const CosineScanArgs& s) {
  if (go_parallel(s.n * s.d)) parallel::cosine_scan(s);
  else serial::cosine_scan(s);
}

void similarity(const SimilarityArgs& s) {
  if (go_parallel(s.ma * s.mb * s.d)) parallel::similarity(s);
  else serial::similarity(s);
}

void ssim_map(const SsimArgs& s) {
  if (go_parallel(s.h * s.w * s.win * s.win)) parallel::ssim_map(s);
  else serial::ssim_map(s);
}

}  // namespace kernels
MOM_NS_END
