// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "mom/tensor.hpp"

MOM_NS_BEGIN

/// Fraction of trials in which gt_class ranks within the top K of itself
/// plus N-1 distractor classes drawn without replacement. A distractor that
/// ties the true class counts as ranking above it.
double nway_topk(std::span<const double> probe_scores, std::size_t gt_class, std::size_t n_way, std::size_t k,
                 Rng& rng, std::size_t trials);
/// Mean over probes: scores [P x n_classes], one ground-truth class per probe,
/// `trials` draws per probe.
double nway_topk(const std::vector<std::vector<double>>& scores, const std::vector<std::size_t>& gt, std::size_t n_way,
                 std::size_t k, Rng& rng, std::size_t trials);

constexpr std::size_t kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimC1 = 0.01 * 0.01;
constexpr double kSsimC2 = 0.03 * 0.03;

/// Mean SSIM over all valid 11x11 Gaussian windows of two [H x W] images
/// with dynamic range 1.
double ssim(const Tensor& a, const Tensor& b);
/// 10 log10(peak^2 / MSE); +infinity when the images are identical.
double psnr(const Tensor& a, const Tensor& b, double peak = 1.0);
/// Mean Pearson correlation between consecutive rows of [F x d]. Rows with
/// zero variance are skipped with a warning.
double temporal_consistency(const Tensor& frame_embeddings);
/// Mean Euclidean norm of the per-pixel difference of two [.. x 2] flows.
double epe(const Tensor& flow_a, const Tensor& flow_b);

struct RetrievalAccuracy {
  double forward = 0;   // probe row -> target rows
  double backward = 0;  // target row -> probe rows
  std::size_t n_subsets = 0;
};

/// Shuffles the M pairs with `rng`, splits them into floor(M / subset_size)
/// subsets and, inside each, counts a probe as correct when its partner's
/// cosine similarity is strictly the largest. Returns means over subsets.
RetrievalAccuracy retrieval_protocol(const Tensor& probes, const Tensor& targets, Rng& rng,
                                     std::size_t subset_size = 300);

/// Clip [F x C x H x W] in [-1, 1] to per-frame grayscale [H x W] in [0, 1].
Tensor clip_frame_gray(const Tensor& clip, std::size_t frame);
/// Mean over frames of ssim / psnr of the grayscale frames.
double clip_ssim(const Tensor& a, const Tensor& b);
double clip_psnr(const Tensor& a, const Tensor& b);

/// Translation flow between consecutive frames from the motion of the
/// magnitude-weighted centroid, as a constant field [F-1 x H x W x 2].
Tensor estimate_translation_flow(const Tensor& clip);

/// Fixed random linear map from flattened frames to unit vectors, standing in
/// for a frozen frame encoder.
class FrameEmbedder {
 public:
  FrameEmbedder(std::size_t frame_size, std::size_t dim, std::uint64_t seed);
  /// clip [F x ...] -> [F x dim]
  Tensor embed(const Tensor& clip) const;

 private:
  std::size_t frame_size_, dim_;
  Tensor w_;
};

struct MetricReport {
  std::string name;
  double value = 0;
  double std = 0;
  std::size_t n_trials = 1;
  std::map<std::string, std::string> config;
};

/// One line per report:
///   name=<name> value=<v> std=<s> n_trials=<n> config.<key>=<value>...
/// Numbers use "%.17g" (inf and nan as printed by printf); config keys are
/// sorted. Names, keys and values must not contain spaces or '='.
std::string format_reports(const std::vector<MetricReport>& reports);
std::vector<MetricReport> parse_reports(const std::string& text);

MOM_NS_END
