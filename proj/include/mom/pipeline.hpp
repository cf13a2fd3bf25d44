// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mom/config.hpp"
#include "mom/evalsuite.hpp"
#include "mom/memory.hpp"

MOM_NS_BEGIN

/// One logged optimizer step. Terms a stage does not use stay zero.
struct StepLog {
  std::size_t step = 0;
  double lr = 0;
  double total = 0, clip = 0, action = 0, cls = 0, diffusion = 0, route = 0;
};

using StepCallback = std::function<void(const StepLog&)>;

std::string format_step(const StepLog& s);

/// Brain model, router, fusion module and denoiser of one run. Parameters of
/// each part are created from an independent substream of the seed.
struct MomModel {
  explicit MomModel(const RunConfig& config);

  BrainModel brain;
  Router router;
  Fusion fusion;
  Denoiser denoiser;
  std::size_t top_k;

  /// Every parameter, in a fixed order (brain, router, fusion, denoiser).
  ParamSet all_params() const;
};

/// Stacked stage-1 inputs for the given samples.
Stage1Inputs stage1_inputs(const BrainModel& brain, const EncodedBatch& enc, const std::vector<SignalSample>& samples,
                           const std::vector<std::size_t>& batch);

/// Epoch-shuffled minibatch order over n samples.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::size_t batch, Rng rng);
  std::vector<std::size_t> next();

 private:
  std::size_t n_, batch_, pos_ = 0;
  std::vector<std::size_t> order_;
  Rng rng_;
};

/// AdamW on stage1_loss with a one-cycle schedule. A non-finite loss raises
/// ErrorKind::Numeric naming the step.
std::vector<StepLog> train_stage1(BrainModel& brain, const std::vector<SignalSample>& train, const Stage1Weights& w,
                                  const TrainOptions& opt, std::uint64_t seed, const StepCallback& on_step = {});

/// (e_txt, phi_v-consolidated e_img, e_act) for every sample, ids 0..n-1.
MemoryPool build_pool(const BrainModel& brain, const std::vector<SignalSample>& samples, const std::string& tag);

/// Routing, retrieval and fusion for one encoded sample.
struct Conditioning {
  RetrievalResult retrieval;
  Tensor cond;  // [n_tokens x d_clip]
};

/// K is clamped to the pool size (with a log line) when the pool is smaller.
std::size_t effective_k(std::size_t k, const MemoryPool& pool);
Conditioning condition(const MomModel& model, const Tensor& f_e, const MemoryPool& pool);

/// Joint optimization of all parts under stage2_loss against a fixed pool.
std::vector<StepLog> train_stage2(MomModel& model, const std::vector<SignalSample>& train, const MemoryPool& pool,
                                  const Stage1Weights& w1, const Stage2Weights& w2, const TrainOptions& opt,
                                  std::uint64_t seed, const StepCallback& on_step = {});

/// encode -> route -> retrieve -> fuse -> sample for one signal.
struct Reconstruction {
  Tensor clip;  // [F x C x H x W]
  RetrievalResult retrieval;
};
Reconstruction reconstruct(const MomModel& model, const MemoryPool& pool, const Tensor& signal, Rng& rng);

/// Inputs for the evaluation battery. `recons` may be empty, which skips the
/// clip metrics; otherwise recons[i] pairs with test[i].
struct EvalInputs {
  const BrainModel* brain = nullptr;
  const std::vector<SignalSample>* test = nullptr;
  std::vector<Tensor> recons;
  std::size_t trials = 10000;
  std::size_t subset = 300;
  std::size_t embed_dim = 64;
  std::uint64_t seed = 0;
};

std::vector<MetricReport> evaluate(const EvalInputs& in);

/// Forward/backward fMRI-to-image retrieval over a sample set: probes are the
/// global tokens, targets the consolidated frame embeddings.
RetrievalAccuracy stage1_retrieval(const BrainModel& brain, const std::vector<SignalSample>& samples, Rng& rng,
                                   std::size_t subset = 300);

/// Mean routing weights over the given samples.
RoutingWeights mean_routing(const MomModel& model, const std::vector<SignalSample>& samples);

MOM_NS_END
