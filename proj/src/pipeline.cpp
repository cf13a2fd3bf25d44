// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#include "mom/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "mom/ops.hpp"
#include "mom/optim.hpp"

MOM_NS_BEGIN

namespace {

enum Stream : std::uint64_t {
  kBrainInit = 101,
  kRouterInit = 102,
  kFusionInit = 103,
  kDenoiserInit = 104,
  kStage1Batches = 201,
  kStage2Batches = 202,
  kStage2Noise = 203,
  kEval = 301,
};

Rng stream(std::uint64_t seed, std::uint64_t s) { return Rng(seed).split(s); }

Tensor stack_rows(const std::vector<SignalSample>& samples, const std::vector<std::size_t>& batch,
                  const Tensor SignalSample::*field) {
  const Tensor& first = samples[batch[0]].*field;
  Shape shape = first.shape();
  shape.insert(shape.begin(), batch.size());
  Tensor out(shape);
  const std::size_t n = first.numel();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Tensor& t = samples[batch[i]].*field;
    std::copy(t.span().begin(), t.span().end(), out.span().begin() + static_cast<std::ptrdiff_t>(i * n));
  }
  return out;
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

void check_finite_loss(double v, const char* stage, std::size_t step) {
  if (!std::isfinite(v)) {
    fail(ErrorKind::Numeric, std::string(stage) + ": non-finite loss at step " + std::to_string(step));
  }
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / double(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / double(v.size() - 1));
}

}  // namespace

std::string format_step(const StepLog& s) {
  const auto z = [](double v) { return v + 0.0; };  // prints -0 as 0
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "step=%zu lr=%.6g loss=%.6g clip=%.6g action=%.6g cls=%.6g diffusion=%.6g route=%.6g", s.step, s.lr,
                z(s.total), z(s.clip), z(s.action), z(s.cls), z(s.diffusion), z(s.route));
  return buf;
}

MomModel::MomModel(const RunConfig& config)
    : brain(config.brain(), *std::make_unique<Rng>(stream(config.seed, kBrainInit))),
      router(config.model_d_model, config.data.d_clip, config.data.d_act,
             *std::make_unique<Rng>(stream(config.seed, kRouterInit))),
      fusion(config.fusion(), *std::make_unique<Rng>(stream(config.seed, kFusionInit))),
      denoiser(config.decoder(), *std::make_unique<Rng>(stream(config.seed, kDenoiserInit))),
      top_k(config.top_k) {}

ParamSet MomModel::all_params() const {
  ParamSet all;
  all.append(brain.params());
  all.append(router.params());
  all.append(fusion.params());
  all.append(denoiser.params());
  return all;
}

Stage1Inputs stage1_inputs(const BrainModel& brain, const EncodedBatch& enc, const std::vector<SignalSample>& samples,
                           const std::vector<std::size_t>& batch) {
  Stage1Inputs in;
  in.f_c = enc.global_token;
  in.img = brain.consolidate_frames(constant(stack_rows(samples, batch, &SignalSample::e_img)));
  in.txt = constant(stack_rows(samples, batch, &SignalSample::e_txt));
  in.f_a = brain.action_project(enc.global_token);
  in.act = constant(stack_rows(samples, batch, &SignalSample::e_act));
  in.logits = brain.classify(enc.global_token);
  in.labels = stack_rows(samples, batch, &SignalSample::labels);
  return in;
}

BatchSampler::BatchSampler(std::size_t n, std::size_t batch, Rng rng)
    : n_(n), batch_(std::min(batch, n)), pos_(n), order_(iota(n)), rng_(std::move(rng)) {
  if (n == 0) fail(ErrorKind::Empty, "batch sampler: no samples");
  if (batch == 0) fail(ErrorKind::Config, "batch sampler: batch size must be >= 1");
}

std::vector<std::size_t> BatchSampler::next() {
  if (pos_ + batch_ > n_) {
    for (std::size_t i = n_; i > 1; --i) std::swap(order_[i - 1], order_[rng_.uniform_int(0, i - 1)]);
    pos_ = 0;
  }
  std::vector<std::size_t> b(order_.begin() + static_cast<std::ptrdiff_t>(pos_),
                             order_.begin() + static_cast<std::ptrdiff_t>(pos_ + batch_));
  pos_ += batch_;
  return b;
}

std::vector<StepLog> train_stage1(BrainModel& brain, const std::vector<SignalSample>& train, const Stage1Weights& w,
                                  const TrainOptions& opt, std::uint64_t seed, const StepCallback& on_step) {
  w.validate();
  std::vector<Parameter> params = brain.params().items();
  AdamW adam(params, {opt.lr, 0.9, 0.999, 1e-8, opt.weight_decay});
  const OneCycle sched{opt.lr, opt.steps, opt.pct_start};
  BatchSampler sampler(train.size(), opt.batch, stream(seed, kStage1Batches));
  std::vector<StepLog> log;
  for (std::size_t step = 0; step < opt.steps; ++step) {
    const auto batch = sampler.next();
    const EncodedBatch enc = brain.forward(constant(stack_rows(train, batch, &SignalSample::signal)));
    const Stage1Terms terms = stage1_loss(stage1_inputs(brain, enc, train, batch), w);
    const double total = terms.total.item();
    check_finite_loss(total, "stage 1", step);
    adam.zero_grad();
    backward(terms.total);
    if (opt.clip_norm > 0) clip_grad_norm(params, opt.clip_norm);
    const double lr = sched.lr(step);
    adam.step(lr);
    StepLog s;
    s.step = step;
    s.lr = lr;
    s.total = total;
    s.clip = terms.clip;
    s.action = terms.action;
    s.cls = terms.cls;
    log.push_back(s);
    if (on_step) on_step(s);
  }
  return log;
}

MemoryPool build_pool(const BrainModel& brain, const std::vector<SignalSample>& samples, const std::string& tag) {
  const BrainModelConfig& c = brain.config();
  MemoryPool pool(c.d_clip, c.d_act);
  NoGradGuard no_grad;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    MemoryEntry e;
    e.id = i;
    e.e_txt = samples[i].e_txt;
    e.e_img = brain.consolidate_frames(samples[i].e_img);
    e.e_act = samples[i].e_act;
    e.source_tag = tag;
    pool.add(e);
  }
  return pool;
}

std::size_t effective_k(std::size_t k, const MemoryPool& pool) {
  if (pool.empty()) fail(ErrorKind::Pool, "retrieval: empty memory pool");
  if (k > pool.size()) {
    log_info("retrieval: K=" + std::to_string(k) + " clamped to pool size " + std::to_string(pool.size()));
    return pool.size();
  }
  return k;
}

namespace {

RetrievalResult retrieve_one(const MomModel& model, std::span<const real> weights, std::span<const real> q_clip,
                             std::span<const real> q_act, const MemoryPool& pool, std::size_t k) {
  const RoutingWeights w{weights[0], weights[1], weights[2]};
  RetrievalResult r = retrieve(mixture_scores(q_clip, q_act, w, pool), pool, k);
  r.weights = w;
  (void)model;
  return r;
}

}  // namespace

Conditioning condition(const MomModel& model, const Tensor& f_e, const MemoryPool& pool) {
  NoGradGuard no_grad;
  const std::size_t k = effective_k(model.top_k, pool);
  const Var fe = constant(f_e);
  const Tensor w = model.router.route(fe).value();
  const Router::Queries q = model.router.query_projections(fe);
  Conditioning c;
  c.retrieval = retrieve_one(model, w.span(), q.q_clip.value().span(), q.q_act.value().span(), pool, k);
  const Tensor f_e_hat = model.fusion.attend_memories(f_e, c.retrieval.image_mems, c.retrieval.action_mems);
  c.cond = model.fusion.fuse(f_e_hat, c.retrieval.text_mem);
  return c;
}

std::vector<StepLog> train_stage2(MomModel& model, const std::vector<SignalSample>& train, const MemoryPool& pool,
                                  const Stage1Weights& w1, const Stage2Weights& w2, const TrainOptions& opt,
                                  std::uint64_t seed, const StepCallback& on_step) {
  w1.validate();
  const std::size_t k = effective_k(model.top_k, pool);
  std::vector<Parameter> params = model.all_params().items();
  AdamW adam(params, {opt.lr, 0.9, 0.999, 1e-8, opt.weight_decay});
  const OneCycle sched{opt.lr, opt.steps, opt.pct_start};
  BatchSampler sampler(train.size(), opt.batch, stream(seed, kStage2Batches));
  Rng noise = stream(seed, kStage2Noise);
  const DecoderConfig& dc = model.denoiser.config();
  const std::size_t d_clip = pool.d_clip(), d_act = pool.d_act();
  std::vector<StepLog> log;
  for (std::size_t step = 0; step < opt.steps; ++step) {
    const auto batch = sampler.next();
    const std::size_t B = batch.size();
    const EncodedBatch enc = model.brain.forward(constant(stack_rows(train, batch, &SignalSample::signal)));
    const Stage1Inputs s1 = stage1_inputs(model.brain, enc, train, batch);

    const Var weights = model.router.route(enc.embedding);
    const Router::Queries q = model.router.query_projections(enc.embedding);
    const Var route =
        route_loss(weights, q.q_clip, q.q_act, s1.txt, constant(s1.img.value()), s1.act, w2.route_tau);

    Tensor text_mem({B, d_clip}), image_mems({B, k, d_clip}), action_mems({B, k, d_act});
    for (std::size_t b = 0; b < B; ++b) {
      const RetrievalResult r = retrieve_one(model, weights.value().row(b), q.q_clip.value().row(b),
                                             q.q_act.value().row(b), pool, k);
      std::copy(r.text_mem.span().begin(), r.text_mem.span().end(), text_mem.row(b).begin());
      std::copy(r.image_mems.span().begin(), r.image_mems.span().end(),
                image_mems.span().begin() + static_cast<std::ptrdiff_t>(b * k * d_clip));
      std::copy(r.action_mems.span().begin(), r.action_mems.span().end(),
                action_mems.span().begin() + static_cast<std::ptrdiff_t>(b * k * d_act));
    }
    const Var f_e_hat = model.fusion.attend_memories(enc.embedding, constant(image_mems), constant(action_mems));
    const Var cond = model.fusion.fuse(f_e_hat, constant(text_mem));
    Tensor y0 = stack_rows(train, batch, &SignalSample::clip);
    y0 = y0.reshaped({B, dc.frames, dc.frame_size()});
    const Var diff = diffusion_loss(model.denoiser, constant(y0), cond, noise);

    const Stage2Terms terms = stage2_loss(s1, w1, diff, route, w2);
    const double total = terms.total.item();
    check_finite_loss(total, "stage 2", step);
    adam.zero_grad();
    backward(terms.total);
    if (opt.clip_norm > 0) clip_grad_norm(params, opt.clip_norm);
    const double lr = sched.lr(step);
    adam.step(lr);
    StepLog s;
    s.step = step;
    s.lr = lr;
    s.total = total;
    s.clip = terms.stage1.clip;
    s.action = terms.stage1.action;
    s.cls = terms.stage1.cls;
    s.diffusion = terms.diffusion;
    s.route = terms.route;
    log.push_back(s);
    if (on_step) on_step(s);
  }
  return log;
}

Reconstruction reconstruct(const MomModel& model, const MemoryPool& pool, const Tensor& signal, Rng& rng) {
  const BrainEncoding e = model.brain.encode(signal.span());
  Conditioning c = condition(model, e.embedding, pool);
  Reconstruction r;
  r.clip = sample(model.denoiser, c.cond, rng);
  r.retrieval = std::move(c.retrieval);
  return r;
}

namespace {

constexpr std::size_t kEvalChunk = 64;

/// Global tokens and consolidated frame embeddings, row-aligned with samples.
std::pair<Tensor, Tensor> probe_target_pairs(const BrainModel& brain, const std::vector<SignalSample>& samples) {
  NoGradGuard no_grad;
  const std::size_t M = samples.size(), d = brain.config().d_clip;
  Tensor probes({M, d}), targets({M, d});
  for (std::size_t start = 0; start < M; start += kEvalChunk) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < std::min(M, start + kEvalChunk); ++i) idx.push_back(i);
    const EncodedBatch enc = brain.forward(constant(stack_rows(samples, idx, &SignalSample::signal)));
    const Var img = brain.consolidate_frames(constant(stack_rows(samples, idx, &SignalSample::e_img)));
    std::copy(enc.global_token.value().span().begin(), enc.global_token.value().span().end(),
              probes.span().begin() + static_cast<std::ptrdiff_t>(start * d));
    std::copy(img.value().span().begin(), img.value().span().end(),
              targets.span().begin() + static_cast<std::ptrdiff_t>(start * d));
  }
  return {probes, targets};
}

MetricReport report(const std::string& name, const std::vector<double>& values, std::size_t n_trials,
                    std::map<std::string, std::string> config = {}) {
  MetricReport r;
  r.name = name;
  r.value = mean_of(values);
  r.std = std_of(values);
  r.n_trials = n_trials;
  r.config = std::move(config);
  return r;
}

}  // namespace

RetrievalAccuracy stage1_retrieval(const BrainModel& brain, const std::vector<SignalSample>& samples, Rng& rng,
                                   std::size_t subset) {
  const auto [probes, targets] = probe_target_pairs(brain, samples);
  return retrieval_protocol(probes, targets, rng, subset);
}

RoutingWeights mean_routing(const MomModel& model, const std::vector<SignalSample>& samples) {
  RoutingWeights m{0, 0, 0};
  if (samples.empty()) fail(ErrorKind::Empty, "mean_routing: no samples");
  NoGradGuard no_grad;
  for (const auto& s : samples) {
    const BrainEncoding e = model.brain.encode(s.signal.span());
    const RoutingWeights w = model.router.route(e.embedding);
    m.w_txt += w.w_txt;
    m.w_img += w.w_img;
    m.w_act += w.w_act;
  }
  const double n = double(samples.size());
  return {m.w_txt / n, m.w_img / n, m.w_act / n};
}

std::vector<MetricReport> evaluate(const EvalInputs& in) {
  if (!in.brain || !in.test) fail(ErrorKind::Config, "evaluate: brain model and test set required");
  const auto& test = *in.test;
  if (test.empty()) fail(ErrorKind::Empty, "evaluate: empty test set");
  if (!in.recons.empty() && in.recons.size() != test.size()) {
    fail(ErrorKind::Protocol, "evaluate: " + std::to_string(in.recons.size()) + " reconstructions for " +
                                  std::to_string(test.size()) + " test samples");
  }
  Rng rng = stream(in.seed, kEval);
  std::vector<MetricReport> out;
  const std::size_t n_subset = std::min(in.subset, test.size());
  if (n_subset < in.subset) {
    log_info("evaluate: retrieval subset reduced to the " + std::to_string(n_subset) + " test samples");
  }
  const std::string subset = std::to_string(n_subset), trials = std::to_string(in.trials);

  {
    Rng r = rng.split(1);
    const RetrievalAccuracy acc = stage1_retrieval(*in.brain, test, r, n_subset);
    out.push_back(report("retrieval.forward", {acc.forward}, acc.n_subsets, {{"subset", subset}}));
    out.push_back(report("retrieval.backward", {acc.backward}, acc.n_subsets, {{"subset", subset}}));
  }

  {
    // One probe per (sample, positive class) pair over the class head logits.
    NoGradGuard no_grad;
    Rng r = rng.split(2);
    const std::size_t n_classes = in.brain->config().n_classes;
    const std::size_t per_probe = std::max<std::size_t>(1, in.trials / test.size());
    std::vector<double> acc;
    for (const auto& s : test) {
      const BrainEncoding e = in.brain->encode(s.signal.span());
      const Tensor logits = in.brain->classify(e.global_token);
      const std::vector<double> scores(logits.span().begin(), logits.span().end());
      for (std::size_t c = 0; c < n_classes; ++c) {
        if (s.labels[c] > 0.5) acc.push_back(nway_topk(scores, c, 2, 1, r, per_probe));
      }
    }
    out.push_back(report("class.2way_top1", acc, acc.size() * per_probe, {{"n_way", "2"}, {"k", "1"}}));
  }

  if (!in.recons.empty()) {
    const Shape& cs = test[0].clip.shape();
    const FrameEmbedder embedder(cs[1] * cs[2] * cs[3], in.embed_dim, in.seed);
    const std::size_t M = test.size();
    std::vector<Tensor> gt_mean(M), rc_mean(M);
    auto mean_unit = [](const Tensor& frames) {
      const std::size_t F = frames.dim(0), d = frames.dim(1);
      Tensor m({d});
      for (std::size_t f = 0; f < F; ++f)
        for (std::size_t j = 0; j < d; ++j) m[j] += frames.row(f)[j] / real(F);
      double n = 0;
      for (std::size_t j = 0; j < d; ++j) n += double(m[j]) * m[j];
      n = std::sqrt(n);
      if (n > 0)
        for (std::size_t j = 0; j < d; ++j) m[j] = static_cast<real>(m[j] / n);
      return m;
    };
    std::vector<double> ssim_v, psnr_v, tc_v, epe_v, mae_v;
    for (std::size_t i = 0; i < M; ++i) {
      const Tensor& rc = in.recons[i];
      require_shape(rc, cs, "reconstruction");
      const Tensor rc_frames = embedder.embed(rc);
      gt_mean[i] = mean_unit(embedder.embed(test[i].clip));
      rc_mean[i] = mean_unit(rc_frames);
      ssim_v.push_back(clip_ssim(rc, test[i].clip));
      psnr_v.push_back(clip_psnr(rc, test[i].clip));
      try {
        tc_v.push_back(temporal_consistency(rc_frames));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Protocol) throw;
        log_warn("evaluate: temporal consistency undefined for reconstruction " + std::to_string(i));
      }
      epe_v.push_back(epe(estimate_translation_flow(rc), test[i].flow_gt));
      double mae = 0;
      for (std::size_t j = 0; j < rc.numel(); ++j) mae += std::abs(double(rc[j]) - test[i].clip[j]);
      mae_v.push_back(mae / double(rc.numel()));
    }
    std::vector<std::vector<double>> sims(M, std::vector<double>(M));
    for (std::size_t i = 0; i < M; ++i)
      for (std::size_t j = 0; j < M; ++j) {
        double s = 0;
        for (std::size_t d = 0; d < in.embed_dim; ++d) s += double(rc_mean[i][d]) * gt_mean[j][d];
        sims[i][j] = s;
      }
    const std::vector<std::size_t> gt = iota(M);
    const std::size_t per_probe = std::max<std::size_t>(1, in.trials / M);
    for (std::size_t n_way : {std::size_t(2), std::size_t(50)}) {
      if (n_way > M) continue;
      Rng r = rng.split(10 + n_way);
      std::vector<double> acc;
      for (std::size_t i = 0; i < M; ++i) acc.push_back(nway_topk(sims[i], gt[i], n_way, 1, r, per_probe));
      out.push_back(report("video." + std::to_string(n_way) + "way_top1", acc, M * per_probe,
                           {{"n_way", std::to_string(n_way)}, {"k", "1"}}));
    }
    out.push_back(report("clip.ssim", ssim_v, M));
    out.push_back(report("clip.psnr", psnr_v, M));
    out.push_back(report("clip.temporal_consistency", tc_v, tc_v.size()));
    out.push_back(report("clip.epe", epe_v, M));
    out.push_back(report("clip.mae", mae_v, M));
  }
  return out;
}

MOM_NS_END
