// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "mom/evalsuite.hpp"
#include "mom/rng.hpp"

using namespace mom;

namespace {

void expect_error(ErrorKind kind, const std::function<void()>& f) {
  try {
    f();
    ADD_FAILURE() << "no error raised";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
  }
}

std::vector<double> random_scores(std::size_t n, Rng& rng) {
  std::vector<double> s(n);
  for (auto& x : s) x = rng.uniform();
  return s;
}

// Exhaustive argmax accuracy over one subset; a tie with the partner counts as a miss.
std::pair<double, double> argmax_oracle(const Tensor& p, const Tensor& t, const std::vector<std::size_t>& rows) {
  const std::size_t n = rows.size();
  std::vector<std::vector<double>> sim(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) sim[i][j] = cosine_sim(p.row(rows[i]), t.row(rows[j]));
  double f = 0, b = 0;
  for (std::size_t i = 0; i < n; ++i) {
    bool fi = true, bi = true;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      fi = fi && sim[i][j] < sim[i][i];
      bi = bi && sim[j][i] < sim[i][i];
    }
    f += fi;
    b += bi;
  }
  return {f / double(n), b / double(n)};
}

}  // namespace

// ---- nway_topk

TEST(NwayTopk, PerfectScoresGiveOne) {
  Rng rng(1);
  std::vector<double> s = random_scores(15, rng);
  s[4] = 2;
  for (std::size_t n : {2, 5, 15})
    for (std::size_t k = 1; k < n; ++k) EXPECT_EQ(nway_topk(s, 4, n, k, rng, 500), 1.0);
}

TEST(NwayTopk, ChanceLevels) {
  Rng rng(2);
  const std::size_t trials = 10000;
  // Fresh random scores per trial: mean over probes with one trial each.
  std::vector<std::vector<double>> scores;
  std::vector<std::size_t> gt;
  for (std::size_t i = 0; i < trials; ++i) {
    scores.push_back(random_scores(100, rng));
    gt.push_back(rng.uniform_int(0, 99));
  }
  EXPECT_NEAR(nway_topk(scores, gt, 2, 1, rng, 1), 0.5, 0.02);
  EXPECT_NEAR(nway_topk(scores, gt, 50, 1, rng, 1), 0.02, 0.005);
}

TEST(NwayTopkProperty, ExpectationIsKOverN) {
  Rng rng(3);
  for (auto [n, k] : {std::pair<std::size_t, std::size_t>{5, 1}, {5, 2}, {10, 3}}) {
    std::vector<std::vector<double>> scores;
    std::vector<std::size_t> gt;
    for (int i = 0; i < 4000; ++i) {
      scores.push_back(random_scores(15, rng));
      gt.push_back(rng.uniform_int(0, 14));
    }
    const double p = double(k) / double(n);
    const double sigma = std::sqrt(p * (1 - p) / 4000);
    EXPECT_NEAR(nway_topk(scores, gt, n, k, rng, 1), p, 3 * sigma) << n << "/" << k;
  }
}

TEST(NwayTopk, BadProtocolArguments) {
  Rng rng(4);
  const std::vector<double> s = random_scores(15, rng);
  expect_error(ErrorKind::Protocol, [&] { nway_topk(s, 0, 16, 1, rng, 10); });
  expect_error(ErrorKind::Protocol, [&] { nway_topk(s, 0, 5, 5, rng, 10); });
  expect_error(ErrorKind::Protocol, [&] { nway_topk(s, 0, 1, 0, rng, 10); });
}

// ---- ssim / psnr

TEST(Ssim, SelfIsOne) {
  Rng rng(5);
  const Tensor x = Tensor::uniform({16, 16}, rng, 0, 1);
  EXPECT_NEAR(ssim(x, x), 1.0, 1e-12);
}

TEST(Ssim, ConstantVersusConstant) {
  const Tensor a = Tensor::full({16, 16}, 0), b = Tensor::full({16, 16}, 1);
  EXPECT_NEAR(ssim(a, b), kSsimC1 / (1 + kSsimC1), 1e-7);
  EXPECT_NEAR(ssim(a, b), 9.999e-5, 1e-8);
}

TEST(SsimProperty, SymmetricAndBounded) {
  Rng rng(6);
  for (int rep = 0; rep < 100; ++rep) {
    const Tensor a = Tensor::uniform({12, 14}, rng, 0, 1), b = Tensor::uniform({12, 14}, rng, 0, 1);
    const double s = ssim(a, b);
    EXPECT_LE(std::abs(s), 1.0);
    EXPECT_NEAR(s, ssim(b, a), 1e-12);
    EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
  }
}

TEST(Ssim, ShapeErrors) {
  const Tensor a({16, 16}), b({16, 15}), tiny({10, 10});
  expect_error(ErrorKind::Dimension, [&] { ssim(a, b); });
  expect_error(ErrorKind::Dimension, [&] { ssim(tiny, tiny); });
}

TEST(Psnr, IdenticalIsInfinite) {
  const Tensor a = Tensor::full({4, 4}, 0.3f);
  EXPECT_EQ(psnr(a, a), std::numeric_limits<double>::infinity());
}

TEST(Psnr, TwentyDecibelsAtMseOneHundredth) {
  const Tensor a = Tensor::full({10, 10}, 0.5f);
  Tensor b = a;
  for (std::size_t i = 0; i < b.numel(); ++i) b[i] = static_cast<real>(a[i] + (i % 2 ? 0.1 : -0.1));
  // Float storage perturbs the differences slightly; compare against the exact MSE.
  double mse = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) mse += std::pow(double(a[i]) - b[i], 2);
  mse /= double(a.numel());
  EXPECT_NEAR(psnr(a, b), 10 * std::log10(1 / mse), 1e-9);
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-5);
  EXPECT_EQ(psnr(a, b), psnr(b, a));
}

TEST(PsnrProperty, DecreasesWithNoiseAmplitude) {
  Rng rng(7);
  const Tensor x = Tensor::uniform({16, 16}, rng, 0, 1), noise = Tensor::randn({16, 16}, rng);
  double prev = std::numeric_limits<double>::infinity();
  for (double amp : {0.01, 0.02, 0.05, 0.1, 0.2}) {
    Tensor y = x;
    for (std::size_t i = 0; i < y.numel(); ++i) y[i] = static_cast<real>(x[i] + amp * noise[i]);
    const double p = psnr(x, y);
    EXPECT_LT(p, prev);
    prev = p;
  }
}

// ---- temporal consistency

TEST(TemporalConsistency, IdenticalFramesGiveOne) {
  Rng rng(8);
  const Tensor v = Tensor::randn({1, 32}, rng);
  Tensor f({4, 32});
  for (std::size_t r = 0; r < 4; ++r) std::copy(v.span().begin(), v.span().end(), f.row(r).begin());
  EXPECT_NEAR(temporal_consistency(f), 1.0, 1e-9);
}

TEST(TemporalConsistency, AlternatingSignGivesMinusOne) {
  Rng rng(9);
  const Tensor v = Tensor::randn({1, 32}, rng);
  Tensor f({5, 32});
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t j = 0; j < 32; ++j) f.row(r)[j] = r % 2 ? -v[j] : v[j];
  EXPECT_NEAR(temporal_consistency(f), -1.0, 1e-9);
}

TEST(TemporalConsistency, IndependentFramesNearZero) {
  Rng rng(10);
  double s = 0;
  for (int c = 0; c < 100; ++c) s += temporal_consistency(Tensor::randn({8, 256}, rng));
  EXPECT_NEAR(s / 100, 0.0, 0.1);
}

TEST(TemporalConsistency, ErrorsAndSkippedPairs) {
  Rng rng(11);
  expect_error(ErrorKind::Protocol, [&] { temporal_consistency(Tensor::randn({1, 8}, rng)); });
  Tensor f = Tensor::randn({3, 8}, rng);
  for (real& v : f.row(2)) v = 1;  // constant frame: pair (1, 2) is skipped
  const auto before = warning_count();
  const double pc = temporal_consistency(f);
  EXPECT_GT(warning_count(), before);
  double ab = 0, aa = 0, bb = 0, ma = 0, mb = 0;
  for (std::size_t j = 0; j < 8; ++j) {
    ma += f.row(0)[j] / 8.0;
    mb += f.row(1)[j] / 8.0;
  }
  for (std::size_t j = 0; j < 8; ++j) {
    ab += (f.row(0)[j] - ma) * (f.row(1)[j] - mb);
    aa += std::pow(f.row(0)[j] - ma, 2);
    bb += std::pow(f.row(1)[j] - mb, 2);
  }
  EXPECT_NEAR(pc, ab / std::sqrt(aa * bb), 1e-6);
}

// ---- epe

TEST(Epe, IdenticalAndConstantOffset) {
  Rng rng(12);
  const Tensor a = Tensor::randn({6, 7, 2}, rng);
  EXPECT_EQ(epe(a, a), 0.0);
  Tensor b = a;
  for (std::size_t i = 0; i < b.numel(); i += 2) b[i] = a[i] + 1;
  EXPECT_NEAR(epe(a, b), 1.0, 1e-6);
}

TEST(Epe, MatchesLoopOracle) {
  Rng rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    const Tensor a = Tensor::randn({3, 5, 6, 2}, rng), b = Tensor::randn({3, 5, 6, 2}, rng);
    double s = 0;
    const std::size_t n = a.numel() / 2;
    for (std::size_t p = 0; p < n; ++p) s += std::hypot(double(a[2 * p]) - b[2 * p], double(a[2 * p + 1]) - b[2 * p + 1]);
    EXPECT_NEAR(epe(a, b), s / double(n), 1e-6);
  }
}

TEST(Epe, ShapeMismatchIsDimensionError) {
  const Tensor a({4, 4, 2}), b({4, 5, 2});
  expect_error(ErrorKind::Dimension, [&] { epe(a, b); });
}

// ---- retrieval protocol

TEST(RetrievalProtocol, PerfectAlignment) {
  Rng rng(14);
  const Tensor e = Tensor::randn({600, 16}, rng);
  const RetrievalAccuracy acc = retrieval_protocol(e, e, rng, 300);
  EXPECT_EQ(acc.forward, 1.0);
  EXPECT_EQ(acc.backward, 1.0);
  EXPECT_EQ(acc.n_subsets, 2u);
}

TEST(RetrievalProtocol, RandomEmbeddingsAtChance) {
  Rng rng(15);
  double f = 0;
  const int reps = 34;  // about 10^4 probes
  for (int r = 0; r < reps; ++r) {
    const Tensor a = Tensor::randn({300, 32}, rng), b = Tensor::randn({300, 32}, rng);
    f += retrieval_protocol(a, b, rng, 300).forward;
  }
  EXPECT_NEAR(f / reps, 1.0 / 300, 0.003);
}

TEST(RetrievalProtocolProperty, EqualsExhaustiveOracle) {
  Rng rng(16);
  for (double snr : {0.3, 1.0, 3.0}) {
    const std::size_t M = 650, d = 24, L = 8;
    const Tensor z = Tensor::randn({M, L}, rng);
    const Tensor A = Tensor::randn({L, d}, rng), B = Tensor::randn({L, d}, rng);
    Tensor p({M, d}), t({M, d});
    for (std::size_t i = 0; i < M; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        double pa = 0, tb = 0;
        for (std::size_t l = 0; l < L; ++l) {
          pa += z.row(i)[l] * A.row(l)[j];
          tb += z.row(i)[l] * A.row(l)[j] * 0.5 + z.row(i)[l] * B.row(l)[j] * 0.5;
        }
        p.row(i)[j] = static_cast<real>(snr * pa + rng.normal());
        t.row(i)[j] = static_cast<real>(snr * tb + rng.normal());
      }
    Rng a(99), b(99);
    const RetrievalAccuracy got = retrieval_protocol(p, t, a, 300);
    const auto order = b.sample_without_replacement(M, M);
    double f = 0, bw = 0;
    for (std::size_t s = 0; s < 2; ++s) {
      const std::vector<std::size_t> rows(order.begin() + std::ptrdiff_t(s * 300), order.begin() + std::ptrdiff_t((s + 1) * 300));
      const auto [fo, bo] = argmax_oracle(p, t, rows);
      f += fo / 2;
      bw += bo / 2;
    }
    EXPECT_DOUBLE_EQ(got.forward, f) << snr;
    EXPECT_DOUBLE_EQ(got.backward, bw) << snr;
  }
}

TEST(RetrievalProtocol, TooFewPairsIsProtocolError) {
  Rng rng(17);
  const Tensor e = Tensor::randn({299, 4}, rng);
  expect_error(ErrorKind::Protocol, [&] { retrieval_protocol(e, e, rng, 300); });
}

// ---- clip helpers and reports

TEST(ClipMetrics, SelfComparison) {
  Rng rng(18);
  const Tensor c = Tensor::uniform({3, 3, 16, 16}, rng, -1, 1);
  EXPECT_NEAR(clip_ssim(c, c), 1.0, 1e-12);
  EXPECT_EQ(clip_psnr(c, c), std::numeric_limits<double>::infinity());
}

TEST(ClipMetrics, TranslationFlowOfShiftedBlob) {
  // A blob on a dark background moving one pixel right per frame.
  Tensor c({3, 1, 16, 16});
  for (std::size_t f = 0; f < 3; ++f)
    for (std::size_t y = 0; y < 16; ++y)
      for (std::size_t x = 0; x < 16; ++x) {
        const double dx = double(x) - (6.0 + double(f)), dy = double(y) - 8.0;
        c[((f * 16) + y) * 16 + x] = static_cast<real>(std::exp(-(dx * dx + dy * dy) / 8));
      }
  const Tensor flow = estimate_translation_flow(c);
  ASSERT_EQ(flow.shape(), Shape({2, 16, 16, 2}));
  EXPECT_NEAR(flow[0], 1.0, 0.05);
  EXPECT_NEAR(flow[1], 0.0, 0.05);
}

TEST(FrameEmbedderTest, DeterministicShape) {
  Rng rng(19);
  const FrameEmbedder a(12, 8, 3), b(12, 8, 3);
  const Tensor c = Tensor::randn({4, 3, 2, 2}, rng);
  const Tensor ea = a.embed(c), eb = b.embed(c);
  EXPECT_EQ(ea.shape(), Shape({4, 8}));
  EXPECT_TRUE(std::equal(ea.span().begin(), ea.span().end(), eb.span().begin()));
}

TEST(MetricReportText, RoundTripAndFieldOrder) {
  MetricReport r;
  r.name = "clip.ssim";
  r.value = 0.1 + 0.2;
  r.std = 1e-300;
  r.n_trials = 42;
  r.config = {{"subset", "300"}, {"k", "1"}};
  const std::string text = format_reports({r});
  EXPECT_EQ(text, "name=clip.ssim value=0.30000000000000004 std=1e-300 n_trials=42 config.k=1 config.subset=300\n");
  const auto back = parse_reports(text);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].value, r.value);
  EXPECT_EQ(back[0].std, r.std);
  EXPECT_EQ(back[0].config, r.config);
  EXPECT_EQ(format_reports(back), text);
}

TEST(MetricReportText, RejectsMalformed) {
  expect_error(ErrorKind::Format, [] { parse_reports("name=x value\n"); });
  MetricReport r;
  r.name = "has space";
  expect_error(ErrorKind::Format, [&] { format_reports({r}); });
}
