// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#include "mom/gradcases.hpp"

#include <map>
#include <memory>

#include "mom/memory.hpp"
#include "mom/objectives.hpp"
#include "mom/ops.hpp"
#include "mom/pipeline.hpp"

MOM_NS_BEGIN

namespace {

struct CaseInstance {
  std::vector<Parameter> params;
  LossFn loss;
  std::shared_ptr<void> hold;
};

using Builder = CaseInstance (*)(std::uint64_t seed);

/// Normal draws rounded through float.
Tensor qrandn(Shape shape, Rng& rng, double stddev = 1.0) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = static_cast<real>(static_cast<float>(stddev * rng.normal()));
  return t;
}

Tensor multi_hot(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor t({rows, cols});
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform() < 0.4 ? 1 : 0;
  return t;
}

/// Overwrites every parameter with float-rounded draws so values match across precisions.
void requantize(std::vector<Parameter>& params, Rng& rng, double stddev) {
  for (auto& p : params) p.mutable_value() = qrandn(p.shape(), rng, stddev);
}

CaseInstance quadratic(std::uint64_t seed) {
  Rng rng(seed);
  ParamSet ps;
  Parameter theta = ps.add("theta", qrandn({6}, rng));
  return {ps.items(), [theta] { return ops::scale(ops::sum(ops::mul(theta, theta)), 0.5); }, nullptr};
}

CaseInstance info_nce_case(std::uint64_t seed, bool symmetric) {
  Rng rng(seed);
  ParamSet ps;
  Parameter a = ps.add("anchors", qrandn({4, 8}, rng));
  Parameter t = ps.add("targets", qrandn({4, 8}, rng));
  return {ps.items(), [=] { return info_nce(a, t, 0.07, symmetric); }, nullptr};
}

CaseInstance clip_case(std::uint64_t seed) {
  Rng rng(seed);
  ParamSet ps;
  Parameter f = ps.add("f_c", qrandn({4, 8}, rng));
  Parameter img = ps.add("img", qrandn({4, 8}, rng));
  Parameter txt = ps.add("txt", qrandn({4, 8}, rng));
  return {ps.items(), [=] { return clip_loss(f, img, txt, 0.07); }, nullptr};
}

CaseInstance action_case(std::uint64_t seed) {
  Rng rng(seed);
  ParamSet ps;
  Parameter f = ps.add("f_a", qrandn({4, 6}, rng));
  Parameter act = ps.add("act", qrandn({4, 6}, rng));
  return {ps.items(), [=] { return action_loss(f, act, 0.07); }, nullptr};
}

CaseInstance cls_case(std::uint64_t seed) {
  Rng rng(seed);
  ParamSet ps;
  Parameter logits = ps.add("logits", qrandn({4, 5}, rng, 2.0));
  const Tensor labels = multi_hot(4, 5, rng);
  return {ps.items(), [=] { return cls_loss(logits, labels, 2.0, 0.5); }, nullptr};
}

RunConfig small_config() {
  RunConfig c;
  c.data.latent_dim = 4;
  c.data.n_voxels = 16;
  c.data.d_clip = 8;
  c.data.d_act = 6;
  c.data.n_classes = 5;
  c.data.frames = 2;
  c.data.channels = 1;
  c.data.height = 4;
  c.data.width = 4;
  c.model_layers = 1;
  c.model_d_model = 8;
  c.model_tokens = 4;
  c.decoder_hidden = 8;
  c.decoder_timesteps = 10;
  c.top_k = 2;
  return c;
}

struct Stage1Data {
  Tensor signals, frames, txt, act, labels;
};

Stage1Data stage1_data(const RunConfig& c, std::size_t B, Rng& rng) {
  Stage1Data d;
  d.signals = qrandn({B, c.data.n_voxels}, rng);
  d.frames = qrandn({B, c.data.frames, c.data.d_clip}, rng);
  d.txt = qrandn({B, c.data.d_clip}, rng);
  d.act = qrandn({B, c.data.d_act}, rng);
  d.labels = multi_hot(B, c.data.n_classes, rng);
  return d;
}

Stage1Inputs stage1_batch(const BrainModel& brain, const EncodedBatch& enc, const Stage1Data& d) {
  Stage1Inputs in;
  in.f_c = enc.global_token;
  in.img = brain.consolidate_frames(constant(d.frames));
  in.txt = constant(d.txt);
  in.f_a = brain.action_project(enc.global_token);
  in.act = constant(d.act);
  in.logits = brain.classify(enc.global_token);
  in.labels = d.labels;
  return in;
}

CaseInstance stage1_case(std::uint64_t seed) {
  const RunConfig c = small_config();
  Rng rng(seed);
  Rng init = rng.split(1);
  auto brain = std::make_shared<BrainModel>(c.brain(), init);
  std::vector<Parameter> params = brain->params().items();
  Rng q = rng.split(2);
  requantize(params, q, 0.3);
  Rng data_rng = rng.split(3);
  const Stage1Data d = stage1_data(c, 3, data_rng);
  Stage1Weights w;
  auto loss = [brain, d, w] {
    const EncodedBatch enc = brain->forward(constant(d.signals));
    return stage1_loss(stage1_batch(*brain, enc, d), w).total;
  };
  return {params, loss, brain};
}

CaseInstance attention_case(std::uint64_t seed) {
  Rng rng(seed);
  ParamSet ps;
  Parameter q = ps.add("q", qrandn({2, 5, 8}, rng));
  Parameter k = ps.add("k", qrandn({2, 5, 8}, rng));
  Parameter v = ps.add("v", qrandn({2, 5, 8}, rng));
  const Tensor r = qrandn({2, 5, 8}, rng);
  return {ps.items(), [=] { return ops::sum(ops::mul(ops::attention(q, k, v, 2), constant(r))); }, nullptr};
}

CaseInstance cross_attention_case(std::uint64_t seed) {
  Rng rng(seed);
  auto ps = std::make_shared<ParamSet>();
  Rng init = rng.split(1);
  const CrossAttentionParams ca = CrossAttentionParams::create(*ps, "ca", 8, 6, 8, 8, 1, init);
  Parameter q = ps->add("q_tokens", Tensor({4, 8}));
  Parameter kv = ps->add("kv_tokens", Tensor({3, 6}));
  Rng vals = rng.split(2);
  requantize(ps->items(), vals, 0.5);
  const Tensor r = qrandn({4, 8}, vals);
  return {ps->items(), [=] { return ops::sum(ops::mul(cross_attention(q, kv, ca), constant(r))); }, ps};
}

CaseInstance fusion_case(std::uint64_t seed) {
  const RunConfig c = small_config();
  Rng rng(seed);
  Rng init = rng.split(1);
  auto fusion = std::make_shared<Fusion>(c.fusion(), init);
  ParamSet inputs;
  Parameter f_e = inputs.add("f_e", Tensor({4, 8}));
  Parameter img = inputs.add("image_mems", Tensor({3, 8}));
  Parameter act = inputs.add("action_mems", Tensor({3, 6}));
  Parameter txt = inputs.add("text_mem", Tensor({8}));
  std::vector<Parameter> params = fusion->params().items();
  for (const auto& p : inputs.items()) params.push_back(p);
  // Random gates, so every branch reaches the output.
  Rng vals = rng.split(2);
  requantize(params, vals, 0.5);
  const Tensor r = qrandn({4, 8}, vals);
  auto loss = [=] {
    const Var fused = fusion->fuse(fusion->attend_memories(f_e, img, act), txt);
    return ops::sum(ops::mul(fused, constant(r)));
  };
  return {params, loss, fusion};
}

CaseInstance route_case(std::uint64_t seed) {
  Rng rng(seed);
  ParamSet ps;
  Parameter logits = ps.add("router_logits", qrandn({3, 3}, rng));
  Parameter q_clip = ps.add("q_clip", qrandn({3, 8}, rng));
  Parameter q_act = ps.add("q_act", qrandn({3, 6}, rng));
  const Tensor txt = qrandn({3, 8}, rng), img = qrandn({3, 8}, rng), act = qrandn({3, 6}, rng);
  return {ps.items(),
          [=] {
            return route_loss(ops::softmax(logits, -1), q_clip, q_act, constant(txt), constant(img), constant(act),
                              0.07);
          },
          nullptr};
}

struct FrozenNoise {
  std::vector<std::size_t> t;
  Tensor eps;
};

FrozenNoise frozen_noise(std::size_t B, const DecoderConfig& dc, Rng& rng) {
  FrozenNoise n;
  for (std::size_t b = 0; b < B; ++b) n.t.push_back(5 + 4 * (b % 2));
  n.eps = qrandn({B, dc.frames, dc.frame_size()}, rng);
  return n;
}

CaseInstance diffusion_case(std::uint64_t seed) {
  const RunConfig c = small_config();
  const DecoderConfig dc = c.decoder();
  Rng rng(seed);
  Rng init = rng.split(1);
  auto den = std::make_shared<Denoiser>(dc, init);
  std::vector<Parameter> params = den->params().items();
  Rng vals = rng.split(2);
  requantize(params, vals, 0.3);
  ParamSet extra;
  Parameter cond = extra.add("cond", qrandn({2, 4, dc.d_cond}, vals));
  params.push_back(cond);
  const Tensor y0 = qrandn({2, dc.frames, dc.frame_size()}, vals, 0.5);
  const FrozenNoise n = frozen_noise(2, dc, vals);
  return {params, [=] { return diffusion_loss(*den, constant(y0), cond, n.t, n.eps); }, den};
}

CaseInstance stage2_case(std::uint64_t seed) {
  const RunConfig c = small_config();
  const std::size_t B = 3, K = c.top_k;
  Rng rng(seed);
  RunConfig cs = c;
  cs.seed = seed;
  auto model = std::make_shared<MomModel>(cs);
  std::vector<Parameter> params = model->all_params().items();
  Rng vals = rng.split(2);
  requantize(params, vals, 0.3);
  const Stage1Data d = stage1_data(c, B, vals);
  // Retrieval is a hard selection; the memories are frozen here.
  const Tensor text_mem = qrandn({B, c.data.d_clip}, vals);
  const Tensor image_mems = qrandn({B, K, c.data.d_clip}, vals);
  const Tensor action_mems = qrandn({B, K, c.data.d_act}, vals);
  const DecoderConfig dc = c.decoder();
  const Tensor y0 = qrandn({B, dc.frames, dc.frame_size()}, vals, 0.5);
  const FrozenNoise n = frozen_noise(B, dc, vals);
  const Stage1Weights w1;
  const Stage2Weights w2;
  auto loss = [=] {
    const EncodedBatch enc = model->brain.forward(constant(d.signals));
    const Stage1Inputs s1 = stage1_batch(model->brain, enc, d);
    const Var weights = model->router.route(enc.embedding);
    const Router::Queries q = model->router.query_projections(enc.embedding);
    const Var route = route_loss(weights, q.q_clip, q.q_act, s1.txt, s1.img, s1.act, w2.route_tau);
    const Var f_e_hat = model->fusion.attend_memories(enc.embedding, constant(image_mems), constant(action_mems));
    const Var cond = model->fusion.fuse(f_e_hat, constant(text_mem));
    const Var diff = diffusion_loss(model->denoiser, constant(y0), cond, n.t, n.eps);
    return stage2_loss(s1, w1, diff, route, w2).total;
  };
  return {params, loss, model};
}

// Single-op cases: each op feeds a fixed random projection to a scalar.

CaseInstance op_matmul(std::uint64_t seed) {
  Rng rng(seed);
  ParamSet ps;
  Parameter a = ps.add("a", qrandn({5, 7}, rng));
  Parameter b = ps.add("b", qrandn({7, 3}, rng));
  const Tensor r = qrandn({5, 3}, rng);
  return {ps.items(), [=] { return ops::sum(ops::mul(ops::matmul(a, b), constant(r))); }, nullptr};
}

CaseInstance op_linear(std::uint64_t seed) {
  Rng rng(seed);
  ParamSet ps;
  Parameter x = ps.add("x", qrandn({2, 3, 6}, rng));
  Parameter w = ps.add("w", qrandn({6, 4}, rng));
  Parameter b = ps.add("b", qrandn({4}, rng));
  Parameter u = ps.add("u", qrandn({5, 4}, rng));
  const Tensor r = qrandn({6, 5}, rng);
  return {ps.items(),
          [=] {
            const Var y = ops::reshape(ops::linear(x, w, b), {6, 4});
            return ops::sum(ops::mul(ops::matmul_nt(y, u), constant(r)));
          },
          nullptr};
}

CaseInstance op_softmax(std::uint64_t seed) {
  Rng rng(seed);
  ParamSet ps;
  Parameter x = ps.add("x", qrandn({4, 6}, rng));
  const Tensor r = qrandn({4, 6}, rng), r2 = qrandn({4, 6}, rng);
  return {ps.items(),
          [=] {
            return ops::add(ops::sum(ops::mul(ops::softmax(x, 0), constant(r))),
                            ops::sum(ops::mul(ops::log_softmax(x), constant(r2))));
          },
          nullptr};
}

CaseInstance op_layer_norm(std::uint64_t seed) {
  Rng rng(seed);
  ParamSet ps;
  Parameter x = ps.add("x", qrandn({3, 8}, rng));
  Parameter g = ps.add("g", qrandn({8}, rng));
  Parameter b = ps.add("b", qrandn({8}, rng));
  const Tensor r = qrandn({3, 8}, rng);
  return {ps.items(),
          [=] { return ops::sum(ops::mul(ops::sigmoid(ops::gelu(ops::layer_norm(x, g, b))), constant(r))); },
          nullptr};
}

CaseInstance op_reshaping(std::uint64_t seed) {
  Rng rng(seed);
  ParamSet ps;
  Parameter x = ps.add("x", qrandn({2, 4, 5}, rng));
  const Tensor r = qrandn({2, 3, 5}, rng);
  return {ps.items(),
          [=] {
            const Var n = ops::l2_normalize(x);
            const Var m = ops::expand(ops::mean_axis(n, 1), 1, 1);
            const Var y = ops::concat({ops::slice(n, 1, 1, 2), m}, 1);
            return ops::sum(ops::mul(y, constant(r)));
          },
          nullptr};
}

CaseInstance op_gather(std::uint64_t seed) {
  Rng rng(seed);
  ParamSet ps;
  Parameter t = ps.add("t", qrandn({5, 4}, rng));
  Parameter sc = ps.add("s", qrandn({4}, rng));
  return {ps.items(),
          [=] {
            const Var y = ops::scale_rows(ops::gather_rows(t, {4, 0, 0, 2}), sc);
            return ops::sum(ops::diagonal(ops::mul(y, y)));
          },
          nullptr};
}

CaseInstance op_mse(std::uint64_t seed) {
  Rng rng(seed);
  ParamSet ps;
  Parameter a = ps.add("a", qrandn({3, 7}, rng));
  const Tensor b = qrandn({3, 7}, rng);
  return {ps.items(), [=] { return ops::mse(a, constant(b)); }, nullptr};
}

const std::map<std::string, Builder>& registry() {
  static const std::map<std::string, Builder> r = {
      {"quadratic", quadratic},
      {"info_nce", [](std::uint64_t s) { return info_nce_case(s, false); }},
      {"info_nce_symmetric", [](std::uint64_t s) { return info_nce_case(s, true); }},
      {"clip_loss", clip_case},
      {"action_loss", action_case},
      {"cls_loss", cls_case},
      {"stage1_loss", stage1_case},
      {"attention", attention_case},
      {"cross_attention", cross_attention_case},
      {"fusion", fusion_case},
      {"route_loss", route_case},
      {"diffusion_loss", diffusion_case},
      {"stage2_loss", stage2_case},
      {"op.matmul", op_matmul},
      {"op.linear", op_linear},
      {"op.softmax", op_softmax},
      {"op.layer_norm", op_layer_norm},
      {"op.reshaping", op_reshaping},
      {"op.gather", op_gather},
      {"op.mse", op_mse},
  };
  return r;
}

CaseInstance build(const std::string& name, std::uint64_t seed) {
  const auto it = registry().find(name);
  if (it == registry().end()) fail(ErrorKind::Config, "gradcheck: unknown case '" + name + "'");
  return it->second(seed);
}

}  // namespace

std::vector<std::string> grad_case_names() {
  std::vector<std::string> names;
  for (const auto& [k, v] : registry()) names.push_back(k);
  return names;
}

ParamSnapshot grad_case_analytic(const std::string& name, std::uint64_t seed) {
  CaseInstance c = build(name, seed);
  for (auto& p : c.params) p.zero_grad();
  const Var loss = c.loss();
  if (loss.numel() != 1) fail(ErrorKind::Check, "gradcheck: case '" + name + "' is not scalar");
  backward(loss);
  ParamSnapshot s;
  s.case_name = name;
  s.seed = seed;
  s.loss = loss.item();
  for (auto& p : c.params) {
    s.names.push_back(p.name());
    s.values.emplace_back(p.value().span().begin(), p.value().span().end());
    s.grads.emplace_back(p.grad().span().begin(), p.grad().span().end());
  }
  return s;
}

GradCheckResult grad_case_check(const ParamSnapshot& snapshot, const GradCheckOptions& options) {
  CaseInstance c = build(snapshot.case_name, snapshot.seed);
  if (c.params.size() != snapshot.names.size()) fail(ErrorKind::Check, "gradcheck: snapshot parameter count differs");
  std::vector<Tensor> analytic;
  for (std::size_t i = 0; i < c.params.size(); ++i) {
    Parameter& p = c.params[i];
    if (p.name() != snapshot.names[i] || p.value().numel() != snapshot.values[i].size()) {
      fail(ErrorKind::Check, "gradcheck: snapshot does not match parameter '" + p.name() + "'");
    }
    Tensor& v = p.mutable_value();
    Tensor g(p.shape());
    for (std::size_t j = 0; j < v.numel(); ++j) {
      v[j] = static_cast<real>(snapshot.values[i][j]);
      g[j] = static_cast<real>(snapshot.grads[i][j]);
    }
    analytic.push_back(std::move(g));
  }
  return grad_check_against(c.loss, c.params, analytic, options);
}

MOM_NS_END
