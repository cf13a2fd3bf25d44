// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mom/tensor.hpp"

MOM_NS_BEGIN

struct GeneratorConfig {
  std::size_t latent_dim = 16;
  std::size_t n_voxels = 256;
  std::size_t d_clip = 64;
  std::size_t d_act = 48;
  std::size_t n_classes = 15;
  double signal_noise_sigma = 0.1;
  double embed_noise_sigma = 0.05;
  std::size_t n_train = 512;
  std::size_t n_test = 300;
  std::uint64_t seed = 0;
  std::size_t frames = 8, channels = 3, height = 16, width = 16;
  /// A modality that is not informative gets pure-noise unit embeddings.
  bool txt_informative = true, img_informative = true, act_informative = true;

  void validate() const;
  Shape clip_shape() const { return {frames, channels, height, width}; }
};

struct SignalSample {
  Tensor signal;   // [n_voxels]
  Tensor e_txt;    // [d_clip]
  Tensor e_img;    // [frames x d_clip]
  Tensor e_act;    // [d_act]
  Tensor labels;   // [n_classes], multi-hot
  Tensor clip;     // [frames x channels x height x width], values in [-1, 1]
  Tensor flow_gt;  // [frames-1 x height x width x 2], (dx, dy) per pixel
  Tensor latent;   // [latent_dim]
};

/// Fixed random maps shared by every sample of a dataset.
struct GeneratorModel {
  Tensor a;        // [n_voxels x latent], orthogonal columns of norm sqrt(n_voxels / latent)
  Tensor m_txt;    // [d_clip x latent]
  Tensor m_img;    // [d_clip x latent]
  Tensor m_act;    // [d_act x latent]
  Tensor b_pos;    // [d_clip x 2], frame readout of the blob offset
  Tensor u_cls;    // [n_classes x latent]
  Tensor v_vel;    // [2 x latent], blob velocity (dx, dy)
  Tensor w_color;  // [channels x latent]
};

struct Dataset {
  GeneratorConfig config;
  std::vector<SignalSample> train, test;
};

constexpr double kBlobSigma = 2.0;
constexpr double kMaxSpeed = 1.0;
constexpr double kLabelThreshold = 0.85;

GeneratorModel make_generator_model(const GeneratorConfig& config);
/// One sample from a given latent; `rng` supplies the observation noise.
SignalSample sample_from_latent(const GeneratorModel& model, const GeneratorConfig& config, const Tensor& z, Rng& rng);
Dataset generate(const GeneratorConfig& config);

/// Backward bilinear warp: out(p) = frame(p - flow(p)), zero outside.
/// frame: [C x H x W], flow: [H x W x 2].
Tensor warp_frame(const Tensor& frame, const Tensor& flow);

inline constexpr std::array<const char*, 15> kSuperclassNames = {
    "accessory", "animal", "appliance", "electronic", "food", "furniture", "indoor", "kitchen",
    "man",       "others", "outdoor",   "crowd",      "sports", "vehicle", "woman"};

class SuperclassMap {
 public:
  SuperclassMap();
  /// Parses "keyword: class" lines; blank lines and '#' comments are skipped.
  static SuperclassMap load(const std::string& path);
  static SuperclassMap parse(const std::string& text);
  /// The table shipped in the data directory.
  static SuperclassMap builtin();

  const std::vector<std::string>& names() const { return names_; }
  std::size_t index_of(const std::string& class_name) const;
  /// Class index for a keyword, or the index of "others" when unknown.
  std::size_t lookup(const std::string& keyword) const;
  std::size_t size() const { return keywords_.size(); }

 private:
  std::vector<std::string> names_;
  std::map<std::string, std::size_t> keywords_;
};

/// Union of the classes of all words as a multi-hot [15] vector.
Tensor map_keywords(const std::vector<std::string>& words, const SuperclassMap& map);

MOM_NS_END
