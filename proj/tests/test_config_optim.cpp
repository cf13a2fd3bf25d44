// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "mom/config.hpp"
#include "mom/optim.hpp"

using namespace mom;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::Io;
}

}  // namespace

// ---- config

TEST(Config, DefaultsValidate) {
  RunConfig c;
  c.validate();
  EXPECT_EQ(c.preset, "desk");
  EXPECT_EQ(c.train1.steps, 2000u);
  EXPECT_EQ(c.train1.batch, 32u);
  EXPECT_EQ(c.train2.steps, 2000u);
  EXPECT_EQ(c.train2.batch, 16u);
  EXPECT_EQ(c.brain().n_layers, 2u);
  EXPECT_EQ(c.brain().d_model, 32u);
  EXPECT_EQ(c.brain().d_clip, c.data.d_clip);
}

TEST(Config, UnknownKeysAndBadValuesRejected) {
  RunConfig c;
  EXPECT_EQ(kind_of([&] { apply_setting(c, "model.n_layerz", "3"); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([&] { apply_setting(c, "model.n_layers", "three"); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([&] { apply_setting(c, "model.n_layers", "3x"); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([&] { apply_setting(c, "data.txt_informative", "maybe"); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([&] { apply_setting(c, "preset", "huge"); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([&] { apply_override(c, "no_equals_sign"); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([&] { apply_config_text(c, "train1.lr = 0.1\nbogus.key = 1\n"); }), ErrorKind::Config);
}

TEST(Config, InvalidValuesFailValidation) {
  for (const char* kv : {"data.n_train=0", "train1.batch=0", "train2.lr=0", "train1.pct_start=1", "retrieval.k=0",
                         "reconstruct.split=val", "stage2.route_tau=0", "data.signal_noise_sigma=-1"}) {
    RunConfig c;
    apply_override(c, kv);
    EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::Config) << kv;
  }
}

TEST(Config, TextParsingWithComments) {
  RunConfig c;
  apply_config_text(c, "# a run\n\n  model.n_layers = 3   # deeper\ntrain1.lr=5e-4\ndata.txt_informative = false\n");
  EXPECT_EQ(c.model_layers, 3u);
  EXPECT_EQ(c.train1.lr, 5e-4);
  EXPECT_FALSE(c.data.txt_informative);
}

TEST(Config, ResolvedSettingsRoundTrip) {
  RunConfig c;
  apply_override(c, "fusion.alpha=0.25");
  apply_override(c, "paths.out=/tmp/x");
  apply_override(c, "seed=12345678901");
  const std::string text = format_settings(c);
  RunConfig d;
  apply_config_text(d, text);
  EXPECT_EQ(format_settings(d), text);
  EXPECT_EQ(d.fusion_alpha, 0.25);
  EXPECT_EQ(d.seed, 12345678901u);
  EXPECT_EQ(d.recon_directory(), c.recon_directory());
  // Every key is listed once and is accepted back.
  std::set<std::string> seen;
  for (const auto& [k, v] : resolved_settings(c)) {
    EXPECT_TRUE(seen.insert(k).second) << k;
    RunConfig e;
    apply_setting(e, k, v);
  }
  EXPECT_GT(seen.size(), 50u);
}

TEST(Config, RealValuesRoundTripExactly) {
  RunConfig c;
  c.stage1.tau = 0.1 + 0.2;
  RunConfig d;
  apply_config_text(d, format_settings(c));
  EXPECT_EQ(d.stage1.tau, c.stage1.tau);
}

TEST(Config, FullPreset) {
  RunConfig c;
  apply_setting(c, "preset", "full");
  EXPECT_EQ(c.train1.steps, 8000u);
  EXPECT_EQ(c.train1.batch, 144u);
  EXPECT_EQ(c.train1.lr, 1e-4);
  EXPECT_EQ(c.train2.batch, 32u);
  EXPECT_EQ(c.train2.lr, 1e-6);
  EXPECT_EQ(c.train2.steps, 20u * 16u);  // 20 epochs of 512 samples
  apply_setting(c, "preset", "desk");
  EXPECT_EQ(c.train1.steps, 2000u);
  EXPECT_EQ(c.train1.lr, 1e-3);
}

// ---- optimizer

TEST(AdamWTest, MatchesScalarReference) {
  Rng rng(1);
  ParamSet ps;
  Parameter p = ps.add("w", Tensor::randn({7}, rng));
  std::vector<double> w(p.value().span().begin(), p.value().span().end()), m(7, 0), v(7, 0);
  AdamWConfig cfg;
  cfg.weight_decay = 0.05;
  AdamW opt(ps.items(), cfg);
  for (int t = 1; t <= 25; ++t) {
    const double lr = 0.01 * t;
    Tensor& g = p.mutable_grad();
    for (std::size_t j = 0; j < 7; ++j) g[j] = static_cast<real>(rng.normal());
    for (std::size_t j = 0; j < 7; ++j) {
      m[j] = 0.9 * m[j] + 0.1 * g[j];
      v[j] = 0.999 * v[j] + 0.001 * double(g[j]) * g[j];
      const double mh = m[j] / (1 - std::pow(0.9, t)), vh = v[j] / (1 - std::pow(0.999, t));
      w[j] = w[j] * (1 - lr * 0.05) - lr * mh / (std::sqrt(vh) + 1e-8);
    }
    opt.step(lr);
    for (std::size_t j = 0; j < 7; ++j) EXPECT_NEAR(p.value()[j], w[j], 1e-5) << t;
  }
  EXPECT_EQ(opt.steps_taken(), 25u);
}

TEST(AdamWTest, FirstStepHandValue) {
  ParamSet ps;
  Parameter p = ps.add("w", Tensor::full({1}, 1));
  AdamW opt(ps.items(), {});
  p.mutable_grad()[0] = 0.5;
  opt.step(0.1);
  // Bias-corrected first step moves by lr * sign(g), plus decay lr * wd * w.
  EXPECT_NEAR(p.value()[0], 1 - 0.1 * 0.01 - 0.1, 1e-6);
}

TEST(AdamWTest, BadConfigRejected) {
  ParamSet ps;
  ps.add("w", Tensor({1}));
  AdamWConfig c;
  c.beta1 = 1;
  EXPECT_EQ(kind_of([&] { AdamW(ps.items(), c); }), ErrorKind::Config);
  c = {};
  c.eps = 0;
  EXPECT_EQ(kind_of([&] { AdamW(ps.items(), c); }), ErrorKind::Config);
}

TEST(OneCycleTest, EndpointsAndPeak) {
  const OneCycle s{1e-3, 100, 0.3, 25, 1e4};
  EXPECT_NEAR(s.lr(0), 4e-5, 1e-15);
  EXPECT_NEAR(s.lr(29), 1e-3, 1e-15);
  EXPECT_NEAR(s.lr(99), 4e-9, 1e-15);
  EXPECT_EQ(s.lr(500), s.lr(99));
  // Midpoint of the warm-up is the mean of start and peak.
  const OneCycle t{1.0, 202, 0.5, 2, 1};  // warm-up spans steps 0..100
  EXPECT_NEAR(t.lr(50), 0.75, 1e-12);
}

TEST(OneCycleProperty, RisesThenFalls) {
  for (std::size_t total : {10, 100, 2000}) {
    const OneCycle s{1e-3, total, 0.3};
    std::size_t peak = 0;
    for (std::size_t i = 1; i < total; ++i)
      if (s.lr(i) > s.lr(peak)) peak = i;
    for (std::size_t i = 1; i <= peak; ++i) EXPECT_GE(s.lr(i), s.lr(i - 1));
    for (std::size_t i = peak + 1; i < total; ++i) EXPECT_LE(s.lr(i), s.lr(i - 1));
    EXPECT_NEAR(s.lr(peak), 1e-3, 1e-12);
  }
}

TEST(ClipGradNorm, RescalesOnlyAboveThreshold) {
  ParamSet ps;
  Parameter a = ps.add("a", Tensor({1})), b = ps.add("b", Tensor({1}));
  a.mutable_grad()[0] = 3;
  b.mutable_grad()[0] = 4;
  EXPECT_NEAR(grad_norm(ps.items()), 5, 1e-12);
  clip_grad_norm(ps.items(), 10);
  EXPECT_EQ(a.grad()[0], 3);
  clip_grad_norm(ps.items(), 1);
  EXPECT_NEAR(a.grad()[0], 0.6, 1e-7);
  EXPECT_NEAR(b.grad()[0], 0.8, 1e-7);
  EXPECT_NEAR(grad_norm(ps.items()), 1, 1e-7);
}
