// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

// Serial reference kernels against their OpenMP variants.
//   ./bench_kernels --benchmark_filter=gemm

#include <benchmark/benchmark.h>

#include <vector>

#include "mom/kernels.hpp"
#include "mom/rng.hpp"

namespace {

using mom::real;
namespace k = mom::kernels;

std::vector<real> randn(std::size_t n, std::uint64_t seed) {
  mom::Rng rng(seed);
  std::vector<real> v(n);
  for (auto& x : v) x = static_cast<real>(rng.normal());
  return v;
}

template <void (*Gemm)(const k::GemmArgs&)>
void BM_gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = randn(n * n, 1), b = randn(n * n, 2);
  std::vector<real> c(n * n);
  for (auto _ : state) {
    Gemm({a.data(), b.data(), c.data(), n, n, n});
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}

template <void (*Scan)(const k::CosineScanArgs&)>
void BM_cosine_scan(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t d = 64;
  const auto rows = randn(n * d, 3), q = randn(d, 4);
  std::vector<double> out(n);
  for (auto _ : state) {
    Scan({q, rows.data(), n, d, out.data()});
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

template <void (*Sim)(const k::SimilarityArgs&)>
void BM_similarity(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t d = 64;
  const auto a = randn(n * d, 5), b = randn(n * d, 6);
  std::vector<double> out(n * n);
  for (auto _ : state) {
    Sim({a.data(), b.data(), n, n, d, out.data()});
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}

template <void (*Ssim)(const k::SsimArgs&)>
void BM_ssim_map(benchmark::State& state) {
  const auto h = static_cast<std::size_t>(state.range(0));
  const std::size_t win = 11;
  mom::Rng rng(7);
  std::vector<double> x(h * h), y(h * h), window(win * win, 1.0 / double(win * win));
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.uniform();
    y[i] = x[i] + 0.1 * rng.normal();
  }
  std::vector<double> out((h - win + 1) * (h - win + 1));
  for (auto _ : state) {
    Ssim({x.data(), y.data(), h, h, window, win, 1e-4, 9e-4, out.data()});
    benchmark::DoNotOptimize(out.data());
  }
}

BENCHMARK(BM_gemm<k::serial::gemm>)->Name("gemm/serial")->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(BM_gemm<k::parallel::gemm>)->Name("gemm/openmp")->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(BM_cosine_scan<k::serial::cosine_scan>)->Name("cosine_scan/serial")->Arg(1000)->Arg(100000);
BENCHMARK(BM_cosine_scan<k::parallel::cosine_scan>)->Name("cosine_scan/openmp")->Arg(1000)->Arg(100000);
BENCHMARK(BM_similarity<k::serial::similarity>)->Name("similarity/serial")->Arg(300)->Arg(1000);
BENCHMARK(BM_similarity<k::parallel::similarity>)->Name("similarity/openmp")->Arg(300)->Arg(1000);
BENCHMARK(BM_ssim_map<k::serial::ssim_map>)->Name("ssim_map/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_ssim_map<k::parallel::ssim_map>)->Name("ssim_map/openmp")->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
