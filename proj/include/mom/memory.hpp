// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mom/autograd.hpp"

MOM_NS_BEGIN

struct MemoryEntry {
  std::uint64_t id = 0;
  Tensor e_txt;  // [d_clip]
  Tensor e_img;  // [d_clip]
  Tensor e_act;  // [d_act]
  std::string source_tag;
};

/// Tri-modality embedding store. Embeddings are kept in three contiguous
/// row-major blocks so scoring is a straight scan.
class MemoryPool {
 public:
  MemoryPool(std::size_t d_clip, std::size_t d_act);

  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  std::size_t d_clip() const { return d_clip_; }
  std::size_t d_act() const { return d_act_; }

  /// Rejects wrong dims, non-finite values and duplicate ids (pool error).
  void add(const MemoryEntry& entry);
  MemoryEntry entry(std::size_t index) const;

  std::uint64_t id(std::size_t index) const { return ids_[index]; }
  const std::string& source_tag(std::size_t index) const { return tags_[index]; }
  std::span<const real> e_txt(std::size_t index) const { return {txt_.data() + index * d_clip_, d_clip_}; }
  std::span<const real> e_img(std::size_t index) const { return {img_.data() + index * d_clip_, d_clip_}; }
  std::span<const real> e_act(std::size_t index) const { return {act_.data() + index * d_act_, d_act_}; }
  const real* txt_block() const { return txt_.data(); }
  const real* img_block() const { return img_.data(); }
  const real* act_block() const { return act_.data(); }
  bool contains_id(std::uint64_t id) const;
  std::uint64_t max_id() const;

 private:
  std::size_t d_clip_, d_act_;
  std::vector<std::uint64_t> ids_;
  std::vector<std::string> tags_;
  std::vector<real> txt_, img_, act_;
  std::vector<std::uint64_t> sorted_ids_;
};

struct RoutingWeights {
  double w_txt = 1.0 / 3, w_img = 1.0 / 3, w_act = 1.0 / 3;
};

struct RetrievalResult {
  RoutingWeights weights;
  std::vector<double> scores;              // one per pool entry
  std::vector<std::size_t> top_indices;    // pool positions, best first
  std::vector<std::uint64_t> top_ids;      // ids of the same entries
  Tensor text_mem;                         // [d_clip], e_txt of the best entry
  Tensor image_mems;                       // [K x d_clip]
  Tensor action_mems;                      // [K x d_act]
};

/// Linear router over mean-pooled token embeddings, plus the two query
/// projections that map the pooled embedding into the memory spaces.
class Router {
 public:
  Router(std::size_t d_model, std::size_t d_clip, std::size_t d_act, Rng& rng);

  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  /// f_e: [L x d_model] or [B x L x d_model] -> softmax weights [3] / [B x 3]
  /// in (txt, img, act) order.
  Var route(const Var& f_e) const;
  RoutingWeights route(const Tensor& f_e) const;

  struct Queries {
    Var q_clip;  // [.. x d_clip]
    Var q_act;   // [.. x d_act]
  };
  Queries query_projections(const Var& f_e) const;

  Parameter w_route, b_route, w_clip, b_clip, w_act, b_act;

 private:
  ParamSet params_;
};

/// S_i = w_txt cos(q_clip, txt_i) + w_img cos(q_clip, img_i) + w_act cos(q_act, act_i)
std::vector<double> mixture_scores(std::span<const real> q_clip, std::span<const real> q_act,
                                   const RoutingWeights& weights, const MemoryPool& pool);

/// Contrastive routing objective over a batch treated as its own pool:
/// S[b][j] = sum_m w[b][m] cos(q_m[b], e_m[j]), loss = -mean_b log softmax_j(S[b] / tau)[b].
/// weights: [B x 3] (txt, img, act); q_clip, txt, img: [B x d_clip]; q_act, act: [B x d_act].
Var route_loss(const Var& weights, const Var& q_clip, const Var& q_act, const Var& txt, const Var& img,
               const Var& act, double tau);

/// Top-K entries by score, best first; equal scores rank the smaller id first.
RetrievalResult retrieve(std::vector<double> scores, const MemoryPool& pool, std::size_t k);

/// Concatenation of a then b. Entries of b whose id is already taken get
/// fresh ids above every id in either pool, in b's order.
MemoryPool pool_merge(const MemoryPool& a, const MemoryPool& b);

MOM_NS_END
