// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "mom/brain_model.hpp"
#include "mom/objectives.hpp"
#include "mom/ops.hpp"
#include "mom/persistence.hpp"
#include "mom/rng.hpp"

using namespace mom;

namespace {

BrainModelConfig small_brain() {
  BrainModelConfig c;
  c.n_voxels = 16;
  c.n_layers = 1;
  c.d_model = 8;
  c.n_tokens = 4;
  c.d_clip = 6;
  c.d_act = 5;
  c.n_classes = 4;
  return c;
}

bool same(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && std::equal(a.span().begin(), a.span().end(), b.span().begin());
}

double loss(const Var& v) { return v.item(); }

void expect_error(ErrorKind kind, const std::function<void()>& f) {
  try {
    f();
    ADD_FAILURE() << "no error raised";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
  }
}

// Scalar reference for one direction of InfoNCE.
double info_nce_ref(const Tensor& a, const Tensor& t, double tau) {
  const std::size_t B = a.dim(0);
  double total = 0;
  for (std::size_t i = 0; i < B; ++i) {
    std::vector<double> s(B);
    for (std::size_t j = 0; j < B; ++j) s[j] = cosine_sim(a.row(i), t.row(j)) / tau;
    const double m = *std::max_element(s.begin(), s.end());
    double z = 0;
    for (double x : s) z += std::exp(x - m);
    total += -(s[i] - m - std::log(z));
  }
  return total / double(B);
}

double bce_ref(const Tensor& logits, const Tensor& y) {
  double s = 0;
  for (std::size_t i = 0; i < logits.numel(); ++i) {
    const double p = std::clamp(1 / (1 + std::exp(-double(logits[i]))), 1e-7, 1 - 1e-7);
    s += -(y[i] * std::log(p) + (1 - y[i]) * std::log(1 - p));
  }
  return s / double(logits.numel());
}

}  // namespace

// ---- brain model

TEST(BrainModel, ZeroSignalGivesFiniteOutputsOfConfiguredShape) {
  Rng rng(1);
  const BrainModel m(small_brain(), rng);
  const Tensor zero({16});
  const BrainEncoding e = m.encode(zero.span());
  EXPECT_EQ(e.global_token.shape(), Shape({6}));
  EXPECT_EQ(e.embedding.shape(), Shape({4, 8}));
  EXPECT_TRUE(e.global_token.all_finite());
  EXPECT_TRUE(e.embedding.all_finite());
}

TEST(BrainModel, EncodeIsDeterministic) {
  Rng r1(3), r2(3);
  const BrainModel a(small_brain(), r1), b(small_brain(), r2);
  Rng s(4);
  const Tensor x = Tensor::randn({16}, s);
  const BrainEncoding ea = a.encode(x.span()), ea2 = a.encode(x.span()), eb = b.encode(x.span());
  EXPECT_TRUE(same(ea.global_token, ea2.global_token));
  EXPECT_TRUE(same(ea.global_token, eb.global_token));
  EXPECT_TRUE(same(ea.embedding, eb.embedding));
}

TEST(BrainModel, SingleVoxelChangeChangesEncoding) {
  Rng rng(5);
  const BrainModel m(small_brain(), rng);
  Tensor x = Tensor::randn({16}, rng);
  const BrainEncoding a = m.encode(x.span());
  x[7] += 0.5f;
  const BrainEncoding b = m.encode(x.span());
  EXPECT_FALSE(same(a.global_token, b.global_token));
  EXPECT_FALSE(same(a.embedding, b.embedding));
}

TEST(BrainModelProperty, PermutationSensitive) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    Rng rng(seed);
    const BrainModel m(small_brain(), rng);
    Tensor x = Tensor::randn({16}, rng);
    const BrainEncoding a = m.encode(x.span());
    std::reverse(x.span().begin(), x.span().end());
    EXPECT_FALSE(same(a.global_token, m.encode(x.span()).global_token)) << seed;
  }
}

TEST(BrainModel, WrongSignalLengthIsDimensionError) {
  Rng rng(6);
  const BrainModel m(small_brain(), rng);
  const Tensor x({15});
  expect_error(ErrorKind::Dimension, [&] { m.encode(x.span()); });
}

TEST(BrainModel, NonDivisibleVoxelCountIsPadded) {
  BrainModelConfig c = small_brain();
  c.n_voxels = 18;
  EXPECT_EQ(c.chunk(), 5u);
  Rng rng(7);
  const BrainModel m(c, rng);
  const Tensor x = Tensor::randn({18}, rng);
  EXPECT_TRUE(m.encode(x.span()).global_token.all_finite());
}

TEST(BrainModel, ReloadedParamsReproduceEncodingBitwise) {
  Rng r1(8), r2(99);
  const BrainModel a(small_brain(), r1);
  BrainModel b(small_brain(), r2);
  apply_checkpoint(decode_checkpoint(encode_checkpoint([&] {
                     std::vector<NamedTensor> blocks;
                     for (const auto& p : a.params().items()) blocks.push_back({p.name(), p.value()});
                     return blocks;
                   }())),
                   b.params());
  Rng s(9);
  const Tensor x = Tensor::randn({16}, s);
  EXPECT_TRUE(same(a.encode(x.span()).global_token, b.encode(x.span()).global_token));
  EXPECT_TRUE(same(a.encode(x.span()).embedding, b.encode(x.span()).embedding));
}

TEST(Heads, ConsolidateSingleFrameWithIdentityHead) {
  Rng rng(10);
  const BrainModel m(small_brain(), rng);
  const Tensor f = Tensor::randn({1, 6}, rng);
  const Tensor out = m.consolidate_frames(f);
  for (std::size_t j = 0; j < 6; ++j) EXPECT_FLOAT_EQ(out[j], f[j]);
}

TEST(Heads, ConsolidateConstantFramesEqualsOneFrame) {
  Rng rng(11);
  BrainModel m(small_brain(), rng);
  m.params().find("head.image.w")->mutable_value() = Tensor::randn({6, 6}, rng);
  const Tensor v = Tensor::randn({1, 6}, rng);
  Tensor many({5, 6});
  for (std::size_t f = 0; f < 5; ++f) std::copy(v.span().begin(), v.span().end(), many.row(f).begin());
  const Tensor a = m.consolidate_frames(v), b = m.consolidate_frames(many);
  for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(a[j], b[j], 1e-6);
}

TEST(Heads, ConsolidateHandMean) {
  BrainModelConfig c = small_brain();
  c.d_clip = 2;
  Rng rng(12);
  const BrainModel m(c, rng);
  const Tensor out = m.consolidate_frames(Tensor::from_rows({{1, 0}, {0, 1}}));
  EXPECT_FLOAT_EQ(out[0], 0.5f);
  EXPECT_FLOAT_EQ(out[1], 0.5f);
}

TEST(Heads, ConsolidateNoFramesIsEmptyError) {
  Rng rng(13);
  const BrainModel m(small_brain(), rng);
  expect_error(ErrorKind::Empty, [&] { m.consolidate_frames(std::vector<Tensor>{}); });
}

TEST(Heads, ZeroWeightsGiveZero) {
  Rng rng(14);
  BrainModel m(small_brain(), rng);
  for (const char* n : {"head.action.w", "head.class.w"}) m.params().find(n)->mutable_value().fill(0);
  const Tensor g = Tensor::randn({6}, rng);
  const Tensor a = m.action_project(g), c = m.classify(g);
  for (real v : a.span()) EXPECT_EQ(v, 0);
  for (real v : c.span()) EXPECT_EQ(v, 0);
}

TEST(Heads, IdentityHeadPassesThrough) {
  BrainModelConfig c = small_brain();
  c.d_act = c.d_clip;
  c.n_classes = c.d_clip;
  Rng rng(15);
  BrainModel m(c, rng);
  m.params().find("head.action.w")->mutable_value() = Tensor::identity(6);
  m.params().find("head.class.w")->mutable_value() = Tensor::identity(6);
  const Tensor g = Tensor::randn({6}, rng);
  EXPECT_TRUE(same(m.action_project(g), g));
  EXPECT_TRUE(same(m.classify(g), g));
}

TEST(Heads, HandMatvec) {
  BrainModelConfig c = small_brain();
  c.d_clip = 3;
  c.d_act = 2;
  c.n_classes = 2;
  Rng rng(16);
  BrainModel m(c, rng);
  // [in x out] weights: y_j = sum_i g_i w_ij + b_j
  const Tensor w = Tensor::from_rows({{1, 2}, {3, 4}, {5, 6}});
  m.params().find("head.action.w")->mutable_value() = w;
  m.params().find("head.action.b")->mutable_value() = Tensor::vector({0.5, -1});
  m.params().find("head.class.w")->mutable_value() = w;
  const Tensor g = Tensor::vector({1, -1, 2});
  const Tensor a = m.action_project(g), k = m.classify(g);
  EXPECT_FLOAT_EQ(a[0], 8.5f);   // 1 - 3 + 10 + 0.5
  EXPECT_FLOAT_EQ(a[1], 9.0f);   // 2 - 4 + 12 - 1
  EXPECT_FLOAT_EQ(k[0], 8.0f);
  EXPECT_FLOAT_EQ(k[1], 10.0f);
}

TEST(BrainModel, FullScalePreset) {
  const BrainModelConfig p = BrainModelConfig::full_scale();
  EXPECT_EQ(p.n_layers, 24u);
  EXPECT_EQ(p.d_model, 2048u);
  EXPECT_EQ(p.n_tokens + 1, 513u);
}

// ---- objectives

TEST(InfoNce, SingleSampleIsZero) {
  Rng rng(20);
  const Tensor a = Tensor::randn({1, 8}, rng), t = Tensor::randn({1, 8}, rng);
  EXPECT_EQ(loss(info_nce(constant(a), constant(t), 0.07)), 0.0);
}

TEST(InfoNce, EqualSimilaritiesGiveLnB) {
  for (std::size_t B : {2, 3, 7}) {
    const Tensor a = Tensor::full({B, 4}, 1), t = Tensor::full({B, 4}, 2);
    EXPECT_NEAR(loss(info_nce(constant(a), constant(t), 0.07)), std::log(double(B)), 1e-5);
  }
}

TEST(InfoNce, OrthogonalPairsHandValue) {
  const Tensor e = Tensor::from_rows({{1, 0}, {0, 1}});
  const double expect = std::log1p(std::exp(-1 / 0.07));
  EXPECT_NEAR(loss(info_nce(constant(e), constant(e), 0.07)), expect, 1e-9);
  EXPECT_NEAR(expect, 6.2e-7, 0.05e-7);
}

TEST(InfoNce, MatchesScalarReference) {
  Rng rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    const Tensor a = Tensor::randn({5, 8}, rng), t = Tensor::randn({5, 8}, rng);
    EXPECT_NEAR(loss(info_nce(constant(a), constant(t), 0.07)), info_nce_ref(a, t, 0.07), 1e-5);
    const double sym = 0.5 * (info_nce_ref(a, t, 0.3) + info_nce_ref(t, a, 0.3));
    EXPECT_NEAR(loss(info_nce(constant(a), constant(t), 0.3, true)), sym, 1e-5);
  }
}

TEST(InfoNceProperty, NonNegativeAndRowScaleInvariant) {
  Rng rng(22);
  for (int rep = 0; rep < 50; ++rep) {
    Tensor a = Tensor::randn({4, 6}, rng);
    const Tensor t = Tensor::randn({4, 6}, rng);
    const double l0 = loss(info_nce(constant(a), constant(t), 0.07));
    EXPECT_GE(l0, 0.0);
    const double c = 0.1 + 10 * rng.uniform();
    for (real& v : a.row(rep % 4)) v = static_cast<real>(v * c);
    EXPECT_NEAR(loss(info_nce(constant(a), constant(t), 0.07)), l0, 1e-5 * std::max(1.0, l0));
  }
}

TEST(InfoNce, EmptyBatchCannotBeBuilt) {
  // Zero-sized axes are rejected when the tensor is made.
  expect_error(ErrorKind::Dimension, [] { Tensor a({0, 4}); });
}

TEST(ClipLoss, IdenticalTargetsSingleSampleIsZero) {
  Rng rng(23);
  const Tensor f = Tensor::randn({1, 8}, rng);
  EXPECT_EQ(loss(clip_loss(constant(f), constant(f), constant(f), 0.07)), 0.0);
}

TEST(ClipLoss, UniformCaseIsTwoLnTwo) {
  const Tensor a = Tensor::full({2, 3}, 1);
  EXPECT_NEAR(loss(clip_loss(constant(a), constant(a), constant(a), 0.07)), 2 * std::log(2.0), 1e-5);
}

TEST(ClipLoss, IsSumOfTwoInfoNce) {
  Rng rng(24);
  const Tensor f = Tensor::randn({4, 8}, rng), img = Tensor::randn({4, 8}, rng), txt = Tensor::randn({4, 8}, rng);
  const double sum = loss(info_nce(constant(f), constant(img), 0.07)) + loss(info_nce(constant(f), constant(txt), 0.07));
  EXPECT_NEAR(loss(clip_loss(constant(f), constant(img), constant(txt), 0.07)), sum, 1e-5);
}

TEST(ActionLoss, DelegatesToInfoNce) {
  Rng rng(25);
  const Tensor f = Tensor::randn({4, 5}, rng), a = Tensor::randn({4, 5}, rng);
  EXPECT_EQ(loss(action_loss(constant(f), constant(a), 0.07)), loss(info_nce(constant(f), constant(a), 0.07)));
  const Tensor f1 = Tensor::randn({1, 5}, rng), a1 = Tensor::randn({1, 5}, rng);
  EXPECT_EQ(loss(action_loss(constant(f1), constant(a1), 0.07)), 0.0);
}

TEST(ClsLoss, ConfidentCorrectIsNearZero) {
  const Tensor labels = Tensor::from_rows({{1, 0, 1}, {0, 1, 0}});
  Tensor logits({2, 3});
  for (std::size_t i = 0; i < 6; ++i) logits[i] = labels[i] > 0.5 ? 40 : -40;
  EXPECT_LT(loss(cls_loss(constant(logits), labels, 2.0, 0.5)), 1e-6);
}

TEST(ClsLoss, FocalSinglePositiveHalfProbability) {
  const Tensor logits = Tensor::from_rows({{0}}), labels = Tensor::from_rows({{1}});
  EXPECT_NEAR(loss(cls_loss(constant(logits), labels, 2.0, 1.0)), 0.25 * std::log(2.0), 1e-6);
}

TEST(ClsLossProperty, GammaZeroFocalEqualsBce) {
  Rng rng(26);
  for (int rep = 0; rep < 100; ++rep) {
    const Tensor logits = Tensor::randn({3, 5}, rng, 3.0);
    Tensor y({3, 5});
    for (std::size_t i = 0; i < y.numel(); ++i) y[i] = rng.uniform() < 0.4 ? 1 : 0;
    EXPECT_NEAR(loss(cls_loss(constant(logits), y, 0.0, 1.0)), bce_ref(logits, y), 1e-6);
    EXPECT_NEAR(loss(cls_loss(constant(logits), y, 0.0, 0.0)), bce_ref(logits, y), 1e-6);
  }
}

TEST(ClsLoss, NonBinaryLabelIsLabelError) {
  const Tensor logits({1, 2}), labels = Tensor::from_rows({{1, 0.5}});
  expect_error(ErrorKind::Label, [&] { cls_loss(constant(logits), labels, 2.0, 0.5); });
}

namespace {

Stage1Inputs random_stage1(Rng& rng, std::size_t B) {
  Stage1Inputs in;
  in.f_c = constant(Tensor::randn({B, 8}, rng));
  in.img = constant(Tensor::randn({B, 8}, rng));
  in.txt = constant(Tensor::randn({B, 8}, rng));
  in.f_a = constant(Tensor::randn({B, 5}, rng));
  in.act = constant(Tensor::randn({B, 5}, rng));
  in.logits = constant(Tensor::randn({B, 4}, rng, 2.0));
  in.labels = Tensor({B, 4});
  for (std::size_t i = 0; i < in.labels.numel(); ++i) in.labels[i] = rng.uniform() < 0.3 ? 1 : 0;
  return in;
}

}  // namespace

TEST(Stage1Loss, ZeroLambdasEqualClipLoss) {
  Rng rng(27);
  const Stage1Inputs in = random_stage1(rng, 4);
  Stage1Weights w;
  w.lambda_action = 0;
  w.lambda_cls = 0;
  EXPECT_EQ(loss(stage1_loss(in, w).total), loss(clip_loss(in.f_c, in.img, in.txt, w.tau)));
}

TEST(Stage1Loss, DegenerateAlignedBatchIsZero) {
  Rng rng(28);
  Stage1Inputs in = random_stage1(rng, 1);
  in.img = in.txt = in.f_c;
  in.act = in.f_a;
  Tensor logits({1, 4});
  for (std::size_t i = 0; i < 4; ++i) logits[i] = in.labels[i] > 0.5 ? 40 : -40;
  in.logits = constant(logits);
  EXPECT_LT(loss(stage1_loss(in, Stage1Weights{}).total), 1e-5);
}

TEST(Stage1Loss, DefaultCoefficientsAndBreakdown) {
  Rng rng(29);
  for (int rep = 0; rep < 20; ++rep) {
    const Stage1Inputs in = random_stage1(rng, 4);
    const Stage1Weights w;
    EXPECT_EQ(w.lambda_action, 0.1);
    EXPECT_EQ(w.lambda_cls, 10.0);
    EXPECT_EQ(w.tau, 0.07);
    const Stage1Terms t = stage1_loss(in, w);
    const double clip = loss(clip_loss(in.f_c, in.img, in.txt, w.tau));
    const double act = loss(action_loss(in.f_a, in.act, w.tau));
    const double cls = loss(cls_loss(in.logits, in.labels, w.focal_gamma, w.focal_mix));
    EXPECT_NEAR(t.clip, clip, 1e-6);
    EXPECT_NEAR(t.action, act, 1e-6);
    EXPECT_NEAR(t.cls, cls, 1e-6);
    EXPECT_NEAR(loss(t.total), t.clip + 0.1 * t.action + 10 * t.cls, 1e-6 * std::max(1.0, loss(t.total)));
  }
}

TEST(Stage1Weights, RejectsBadValues) {
  Stage1Weights w;
  w.tau = 0;
  expect_error(ErrorKind::Config, [&] { w.validate(); });
  w = {};
  w.focal_mix = 1.5;
  expect_error(ErrorKind::Config, [&] { w.validate(); });
}
