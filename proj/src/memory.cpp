// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#include "mom/memory.hpp"

#include "dense64.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mom/kernels.hpp"
#include "mom/ops.hpp"

MOM_NS_BEGIN

MemoryPool::MemoryPool(std::size_t d_clip, std::size_t d_act) : d_clip_(d_clip), d_act_(d_act) {
  if (d_clip == 0 || d_act == 0) fail(ErrorKind::Pool, "memory pool: dims must be positive");
}

namespace {

void check_embedding(const Tensor& t, std::size_t d, const char* what) {
  if (t.numel() != d) {
    fail(ErrorKind::Pool, std::string("memory entry: ") + what + " has " + std::to_string(t.numel()) +
                              " values, pool expects " + std::to_string(d));
  }
  if (!t.all_finite()) fail(ErrorKind::Pool, std::string("memory entry: ") + what + " is not finite");
}

}  // namespace

void MemoryPool::add(const MemoryEntry& e) {
  check_embedding(e.e_txt, d_clip_, "e_txt");
  check_embedding(e.e_img, d_clip_, "e_img");
  check_embedding(e.e_act, d_act_, "e_act");
  const auto pos = std::lower_bound(sorted_ids_.begin(), sorted_ids_.end(), e.id);
  if (pos != sorted_ids_.end() && *pos == e.id) {
    fail(ErrorKind::Pool, "memory pool: duplicate id " + std::to_string(e.id));
  }
  sorted_ids_.insert(pos, e.id);
  ids_.push_back(e.id);
  tags_.push_back(e.source_tag);
  txt_.insert(txt_.end(), e.e_txt.values().begin(), e.e_txt.values().end());
  img_.insert(img_.end(), e.e_img.values().begin(), e.e_img.values().end());
  act_.insert(act_.end(), e.e_act.values().begin(), e.e_act.values().end());
}

MemoryEntry MemoryPool::entry(std::size_t i) const {
  if (i >= size()) fail(ErrorKind::Pool, "memory pool: index " + std::to_string(i) + " out of range");
  MemoryEntry e;
  e.id = ids_[i];
  e.source_tag = tags_[i];
  auto copy = [](std::span<const real> s) { return Tensor({s.size()}, std::vector<real>(s.begin(), s.end())); };
  e.e_txt = copy(e_txt(i));
  e.e_img = copy(e_img(i));
  e.e_act = copy(e_act(i));
  return e;
}

bool MemoryPool::contains_id(std::uint64_t id) const {
  return std::binary_search(sorted_ids_.begin(), sorted_ids_.end(), id);
}

std::uint64_t MemoryPool::max_id() const { return sorted_ids_.empty() ? 0 : sorted_ids_.back(); }

Router::Router(std::size_t d_model, std::size_t d_clip, std::size_t d_act, Rng& rng) {
  w_route = params_.add("router.w", Tensor::zeros({d_model, 3}));
  b_route = params_.add("router.b", Tensor::zeros({3}));
  const double s = 1.0 / std::sqrt(double(d_model));
  w_clip = params_.add("query.clip.w", Tensor::randn({d_model, d_clip}, rng, s));
  b_clip = params_.add("query.clip.b", Tensor::zeros({d_clip}));
  w_act = params_.add("query.act.w", Tensor::randn({d_model, d_act}, rng, s));
  b_act = params_.add("query.act.b", Tensor::zeros({d_act}));
}

Var Router::route(const Var& f_e) const {
  if (f_e.rank() != 2 && f_e.rank() != 3) {
    fail(ErrorKind::Dimension, "route: expected token embeddings, got " + shape_str(f_e.shape()));
  }
  return ops::softmax(ops::linear(ops::mean_axis(f_e, -2), w_route, b_route));
}

RoutingWeights Router::route(const Tensor& f_e) const {
  NoGradGuard guard;
  const Tensor w = route(constant(f_e)).value();
  if (w.numel() != 3) fail(ErrorKind::Dimension, "route: expected a single example");
  return {w[0], w[1], w[2]};
}

Router::Queries Router::query_projections(const Var& f_e) const {
  if (f_e.rank() != 2 && f_e.rank() != 3) {
    fail(ErrorKind::Dimension, "query_projections: expected token embeddings, got " + shape_str(f_e.shape()));
  }
  const Var pooled = ops::mean_axis(f_e, -2);
  return {ops::linear(pooled, w_clip, b_clip), ops::linear(pooled, w_act, b_act)};
}

std::vector<double> mixture_scores(std::span<const real> q_clip, std::span<const real> q_act,
                                   const RoutingWeights& w, const MemoryPool& pool) {
  if (pool.empty()) fail(ErrorKind::Pool, "mixture_scores: empty pool");
  if (q_clip.size() != pool.d_clip() || q_act.size() != pool.d_act()) {
    fail(ErrorKind::Dimension, "mixture_scores: query dims (" + std::to_string(q_clip.size()) + ", " +
                                   std::to_string(q_act.size()) + ") do not match pool");
  }
  const std::size_t n = pool.size();
  std::vector<double> txt(n), img(n), act(n);
  kernels::cosine_scan({q_clip, pool.txt_block(), n, pool.d_clip(), txt.data()});
  kernels::cosine_scan({q_clip, pool.img_block(), n, pool.d_clip(), img.data()});
  kernels::cosine_scan({q_act, pool.act_block(), n, pool.d_act(), act.data()});
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = w.w_txt * txt[i] + w.w_img * img[i] + w.w_act * act[i];
  return s;
}

Var route_loss(const Var& weights, const Var& q_clip, const Var& q_act, const Var& txt, const Var& img,
               const Var& act, double tau) {
  if (weights.rank() != 2 || weights.dim(1) != 3) {
    fail(ErrorKind::Dimension, "route_loss: weights must be [B x 3], got " + shape_str(weights.shape()));
  }
  if (!(tau > 0)) fail(ErrorKind::Config, "route_loss: tau must be > 0");
  const std::size_t B = weights.dim(0);
  for (const Var* v : {&q_clip, &q_act, &txt, &img, &act}) {
    if (v->rank() != 2 || v->dim(0) != B) fail(ErrorKind::Dimension, "route_loss: batch sizes disagree");
  }
  if (q_clip.dim(1) != txt.dim(1) || q_clip.dim(1) != img.dim(1) || q_act.dim(1) != act.dim(1)) {
    fail(ErrorKind::Dimension, "route_loss: query and memory widths disagree");
  }
  using namespace dense64;
  // Whole loss in double; see info_nce.
  std::vector<double> n_qc, n_qa, n_txt, n_img, n_act;
  const Mat w = from_tensor(weights.value());
  const Mat qc = normalize_rows(from_tensor(q_clip.value()), n_qc);
  const Mat qa = normalize_rows(from_tensor(q_act.value()), n_qa);
  const Mat et = normalize_rows(from_tensor(txt.value()), n_txt);
  const Mat ei = normalize_rows(from_tensor(img.value()), n_img);
  const Mat ea = normalize_rows(from_tensor(act.value()), n_act);
  const Mat c[3] = {mul_nt(qc, et), mul_nt(qc, ei), mul_nt(qa, ea)};
  Mat s(B, B);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t j = 0; j < B; ++j) s(b, j) = w(b, 0) * c[0](b, j) + w(b, 1) * c[1](b, j) + w(b, 2) * c[2](b, j);
  Mat gs;
  const double loss = diagonal_nce(s, tau, gs);
  Mat gw(B, 3), gc[3] = {Mat(B, B), Mat(B, B), Mat(B, B)};
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t j = 0; j < B; ++j)
      for (std::size_t m = 0; m < 3; ++m) {
        gw(b, m) += gs(b, j) * c[m](b, j);
        gc[m](b, j) = gs(b, j) * w(b, m);
      }
  Mat gqc = mul(gc[0], et);
  const Mat gqc_img = mul(gc[1], ei);
  for (std::size_t i = 0; i < gqc.v.size(); ++i) gqc.v[i] += gqc_img.v[i];
  std::vector<Mat> grads = {gw,
                            normalize_backward(qc, n_qc, gqc),
                            normalize_backward(qa, n_qa, mul(gc[2], ea)),
                            normalize_backward(et, n_txt, mul_tn(gc[0], qc)),
                            normalize_backward(ei, n_img, mul_tn(gc[1], qc)),
                            normalize_backward(ea, n_act, mul_tn(gc[2], qa))};
  return make_op(Tensor({1}, static_cast<real>(loss)), {weights, q_clip, q_act, txt, img, act},
                 [grads = std::move(grads)](Node& self) {
                   const double up = self.grad[0];
                   for (std::size_t i = 0; i < grads.size(); ++i) {
                     if (self.parents[i]->requires_grad) accumulate(self.parents[i]->grad_buffer(), grads[i], up);
                   }
                 });
}

RetrievalResult retrieve(std::vector<double> scores, const MemoryPool& pool, std::size_t k) {
  const std::size_t n = pool.size();
  if (scores.size() != n) fail(ErrorKind::Dimension, "retrieve: one score per pool entry required");
  if (k == 0) fail(ErrorKind::Pool, "retrieve: K must be at least 1");
  if (k > n) {
    fail(ErrorKind::Pool, "retrieve: K=" + std::to_string(k) + " exceeds pool size " + std::to_string(n));
  }
  for (double s : scores) {
    if (std::isnan(s)) fail(ErrorKind::Numeric, "retrieve: NaN score");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return pool.id(a) < pool.id(b);
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), better);
  order.resize(k);

  RetrievalResult r;
  r.top_indices = order;
  for (std::size_t i : order) r.top_ids.push_back(pool.id(i));
  const auto t = pool.e_txt(order[0]);
  r.text_mem = Tensor({pool.d_clip()}, std::vector<real>(t.begin(), t.end()));
  r.image_mems = Tensor({k, pool.d_clip()});
  r.action_mems = Tensor({k, pool.d_act()});
  for (std::size_t j = 0; j < k; ++j) {
    const auto img = pool.e_img(order[j]);
    const auto act = pool.e_act(order[j]);
    std::copy(img.begin(), img.end(), r.image_mems.row(j).begin());
    std::copy(act.begin(), act.end(), r.action_mems.row(j).begin());
  }
  r.scores = std::move(scores);
  return r;
}

MemoryPool pool_merge(const MemoryPool& a, const MemoryPool& b) {
  if (a.d_clip() != b.d_clip() || a.d_act() != b.d_act()) {
    fail(ErrorKind::Pool, "pool_merge: dims (" + std::to_string(a.d_clip()) + ", " + std::to_string(a.d_act()) +
                              ") vs (" + std::to_string(b.d_clip()) + ", " + std::to_string(b.d_act()) + ")");
  }
  MemoryPool out(a.d_clip(), a.d_act());
  for (std::size_t i = 0; i < a.size(); ++i) out.add(a.entry(i));
  std::uint64_t next = std::max(a.max_id(), b.max_id());
  for (std::size_t i = 0; i < b.size(); ++i) {
    MemoryEntry e = b.entry(i);
    if (out.contains_id(e.id)) e.id = ++next;
    out.add(e);
  }
  return out;
}

MOM_NS_END
