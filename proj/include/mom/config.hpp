// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mom/brain_model.hpp"
#include "mom/datasynth.hpp"
#include "mom/decoder.hpp"
#include "mom/fusion.hpp"
#include "mom/objectives.hpp"

MOM_NS_BEGIN

struct TrainOptions {
  std::size_t steps = 2000;
  std::size_t batch = 32;
  double lr = 1e-3;
  double weight_decay = 0.01;
  double pct_start = 0.3;
  double clip_norm = 1.0;
  std::size_t log_every = 100;
};

/// Everything a run needs. Dimensions shared by several modules (d_clip,
/// d_act, clip shape) live once under data.* and are copied into the module
/// configs by the accessors below.
struct RunConfig {
  std::string preset = "desk";
  std::uint64_t seed = 0;
  GeneratorConfig data;
  std::size_t model_layers = 2, model_d_model = 32, model_tokens = 8, model_heads = 1;
  std::size_t decoder_hidden = 64, decoder_heads = 1, decoder_timesteps = 50;
  double decoder_beta_start = 1e-4, decoder_beta_end = 0.02;
  double fusion_alpha = 1.0;
  std::size_t fusion_heads = 1;
  std::size_t top_k = 4;
  Stage1Weights stage1;
  Stage2Weights stage2;
  TrainOptions train1{2000, 32};
  TrainOptions train2{2000, 16};
  std::size_t eval_trials = 10000;
  std::size_t eval_subset = 300;
  std::size_t eval_embed_dim = 64;
  std::size_t reconstruct_limit = 0;  // 0 = every sample of the split
  std::string reconstruct_split = "test";
  // Empty paths resolve to fixed names inside the output directory.
  std::string out_dir = ".";
  std::string dataset_path, stage1_path, pool_path, merge_pool_path, stage2_path, recon_dir, report_path;

  BrainModelConfig brain() const;
  FusionConfig fusion() const;
  DecoderConfig decoder() const;

  std::string dataset_file() const;
  std::string stage1_file() const;
  std::string pool_file() const;
  std::string stage2_file() const;
  std::string recon_directory() const;
  std::string report_file() const;

  void validate() const;
};

/// Sets one dotted key ("model.n_layers", "train1.lr", ...). Unknown keys and
/// unparsable values raise ErrorKind::Config. Setting "preset" resets the
/// step counts, batch sizes and learning rates to that preset ("desk" or "full").
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);
/// Parses "key = value" lines; '#' starts a comment.
void apply_config_text(RunConfig& config, const std::string& text);
/// "key=value" override as given on the command line.
void apply_override(RunConfig& config, const std::string& assignment);

/// Every key with its current value, in a fixed order.
std::vector<std::pair<std::string, std::string>> resolved_settings(const RunConfig& config);
/// resolved_settings as "key = value" lines, parseable by apply_config_text.
std::string format_settings(const RunConfig& config);

MOM_NS_END
