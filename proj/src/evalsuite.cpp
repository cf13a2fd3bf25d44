// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#include "mom/evalsuite.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "mom/kernels.hpp"
#include "mom/rng.hpp"

MOM_NS_BEGIN

double nway_topk(std::span<const double> scores, std::size_t gt, std::size_t n_way, std::size_t k, Rng& rng,
                 std::size_t trials) {
  const std::size_t n_classes = scores.size();
  if (n_way < 2 || n_way > n_classes) {
    fail(ErrorKind::Protocol, "nway_topk: N=" + std::to_string(n_way) + " needs 2 <= N <= n_classes=" +
                                  std::to_string(n_classes));
  }
  if (k < 1 || k >= n_way) fail(ErrorKind::Protocol, "nway_topk: K must satisfy 1 <= K < N");
  if (gt >= n_classes) fail(ErrorKind::Protocol, "nway_topk: ground-truth class out of range");
  if (trials == 0) fail(ErrorKind::Protocol, "nway_topk: need at least one trial");
  std::vector<std::size_t> others(n_classes - 1);
  for (std::size_t c = 0, j = 0; c < n_classes; ++c) {
    if (c != gt) others[j++] = c;
  }
  std::size_t hits = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto pick = rng.sample_without_replacement(others.size(), n_way - 1);
    std::size_t above = 0;
    for (std::size_t p : pick) {
      if (scores[others[p]] >= scores[gt]) ++above;
    }
    if (above < k) ++hits;
  }
  return double(hits) / double(trials);
}

double nway_topk(const std::vector<std::vector<double>>& scores, const std::vector<std::size_t>& gt,
                 std::size_t n_way, std::size_t k, Rng& rng, std::size_t trials) {
  if (scores.empty() || scores.size() != gt.size()) fail(ErrorKind::Protocol, "nway_topk: one label per probe");
  double sum = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) sum += nway_topk(scores[i], gt[i], n_way, k, rng, trials);
  return sum / double(scores.size());
}

namespace {

std::vector<double> gaussian_window() {
  std::vector<double> g(kSsimWindow);
  const double c = 0.5 * double(kSsimWindow - 1);
  double s = 0;
  for (std::size_t i = 0; i < kSsimWindow; ++i) {
    g[i] = std::exp(-(double(i) - c) * (double(i) - c) / (2 * kSsimSigma * kSsimSigma));
    s += g[i];
  }
  std::vector<double> w(kSsimWindow * kSsimWindow);
  for (std::size_t i = 0; i < kSsimWindow; ++i)
    for (std::size_t j = 0; j < kSsimWindow; ++j) w[i * kSsimWindow + j] = g[i] * g[j] / (s * s);
  return w;
}

void require_same(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    fail(ErrorKind::Dimension, std::string(what) + ": shapes " + shape_str(a.shape()) + " and " +
                                   shape_str(b.shape()) + " differ");
  }
}

}  // namespace

double ssim(const Tensor& a, const Tensor& b) {
  require_same(a, b, "ssim");
  if (a.rank() != 2 || a.dim(0) < kSsimWindow || a.dim(1) < kSsimWindow) {
    fail(ErrorKind::Dimension, "ssim: images must be [H x W] with H, W >= 11, got " + shape_str(a.shape()));
  }
  static const std::vector<double> window = gaussian_window();
  const std::size_t h = a.dim(0), w = a.dim(1);
  std::vector<double> x(a.values().begin(), a.values().end()), y(b.values().begin(), b.values().end());
  std::vector<double> map((h - kSsimWindow + 1) * (w - kSsimWindow + 1));
  kernels::ssim_map({x.data(), y.data(), h, w, window, kSsimWindow, kSsimC1, kSsimC2, map.data()});
  double s = 0;
  for (double v : map) s += v;
  return s / double(map.size());
}

double psnr(const Tensor& a, const Tensor& b, double peak) {
  require_same(a, b, "psnr");
  double se = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const double d = double(a[i]) - double(b[i]);
    se += d * d;
  }
  if (se == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / (se / double(a.numel())));
}

double temporal_consistency(const Tensor& e) {
  if (e.rank() != 2 || e.dim(0) < 2) {
    fail(ErrorKind::Protocol, "temporal_consistency: need [F x d] with F >= 2, got " + shape_str(e.shape()));
  }
  const std::size_t F = e.dim(0), d = e.dim(1);
  std::vector<double> mean(F), norm(F);
  std::vector<std::vector<double>> centered(F, std::vector<double>(d));
  for (std::size_t f = 0; f < F; ++f) {
    double m = 0;
    for (std::size_t j = 0; j < d; ++j) m += e.at(f, j);
    m /= double(d);
    double n = 0;
    for (std::size_t j = 0; j < d; ++j) {
      centered[f][j] = e.at(f, j) - m;
      n += centered[f][j] * centered[f][j];
    }
    norm[f] = std::sqrt(n);
  }
  double sum = 0;
  std::size_t used = 0;
  for (std::size_t f = 0; f + 1 < F; ++f) {
    if (norm[f] == 0 || norm[f + 1] == 0) {
      log_warn("temporal_consistency: zero-variance frame in pair " + std::to_string(f) + ", skipped");
      continue;
    }
    double c = 0;
    for (std::size_t j = 0; j < d; ++j) c += centered[f][j] * centered[f + 1][j];
    sum += c / (norm[f] * norm[f + 1]);
    ++used;
  }
  if (used == 0) fail(ErrorKind::Protocol, "temporal_consistency: every frame pair has zero variance");
  return sum / double(used);
}

double epe(const Tensor& a, const Tensor& b) {
  require_same(a, b, "epe");
  if (a.shape().back() != 2) fail(ErrorKind::Dimension, "epe: flows must end in a (dx, dy) axis");
  double s = 0;
  const std::size_t n = a.numel() / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = double(a[2 * i]) - b[2 * i], dy = double(a[2 * i + 1]) - b[2 * i + 1];
    s += std::sqrt(dx * dx + dy * dy);
  }
  return s / double(n);
}

RetrievalAccuracy retrieval_protocol(const Tensor& probes, const Tensor& targets, Rng& rng,
                                     std::size_t subset_size) {
  require_same(probes, targets, "retrieval_protocol");
  if (probes.rank() != 2) fail(ErrorKind::Dimension, "retrieval_protocol: embeddings must be [M x d]");
  const std::size_t M = probes.dim(0), d = probes.dim(1);
  if (subset_size < 2 || M < subset_size) {
    fail(ErrorKind::Protocol, "retrieval_protocol: M=" + std::to_string(M) + " is smaller than subset size " +
                                  std::to_string(subset_size));
  }
  const auto order = rng.sample_without_replacement(M, M);
  RetrievalAccuracy acc;
  acc.n_subsets = M / subset_size;
  std::vector<real> a(subset_size * d), b(subset_size * d);
  std::vector<double> sim(subset_size * subset_size);
  for (std::size_t s = 0; s < acc.n_subsets; ++s) {
    for (std::size_t i = 0; i < subset_size; ++i) {
      const std::size_t src = order[s * subset_size + i];
      std::copy(probes.row(src).begin(), probes.row(src).end(), a.begin() + std::ptrdiff_t(i * d));
      std::copy(targets.row(src).begin(), targets.row(src).end(), b.begin() + std::ptrdiff_t(i * d));
    }
    kernels::similarity({a.data(), b.data(), subset_size, subset_size, d, sim.data()});
    std::size_t fwd = 0, bwd = 0;
    for (std::size_t i = 0; i < subset_size; ++i) {
      bool row_best = true, col_best = true;
      const double diag = sim[i * subset_size + i];
      for (std::size_t j = 0; j < subset_size && (row_best || col_best); ++j) {
        if (j == i) continue;
        if (sim[i * subset_size + j] >= diag) row_best = false;
        if (sim[j * subset_size + i] >= diag) col_best = false;
      }
      fwd += row_best;
      bwd += col_best;
    }
    acc.forward += double(fwd) / double(subset_size);
    acc.backward += double(bwd) / double(subset_size);
  }
  acc.forward /= double(acc.n_subsets);
  acc.backward /= double(acc.n_subsets);
  return acc;
}

Tensor clip_frame_gray(const Tensor& clip, std::size_t frame) {
  if (clip.rank() != 4 || frame >= clip.dim(0)) {
    fail(ErrorKind::Dimension, "clip_frame_gray: bad clip " + shape_str(clip.shape()) + " or frame index");
  }
  const std::size_t C = clip.dim(1), H = clip.dim(2), W = clip.dim(3);
  Tensor g({H, W});
  for (std::size_t p = 0; p < H * W; ++p) {
    double s = 0;
    for (std::size_t c = 0; c < C; ++c) s += clip[(frame * C + c) * H * W + p];
    g[p] = static_cast<real>(0.5 * (s / double(C) + 1.0));
  }
  return g;
}

double clip_ssim(const Tensor& a, const Tensor& b) {
  require_same(a, b, "clip_ssim");
  double s = 0;
  for (std::size_t f = 0; f < a.dim(0); ++f) s += ssim(clip_frame_gray(a, f), clip_frame_gray(b, f));
  return s / double(a.dim(0));
}

double clip_psnr(const Tensor& a, const Tensor& b) {
  require_same(a, b, "clip_psnr");
  double s = 0;
  for (std::size_t f = 0; f < a.dim(0); ++f) s += psnr(clip_frame_gray(a, f), clip_frame_gray(b, f));
  return s / double(a.dim(0));
}

Tensor estimate_translation_flow(const Tensor& clip) {
  if (clip.rank() != 4 || clip.dim(0) < 2) {
    fail(ErrorKind::Dimension, "estimate_translation_flow: need [F x C x H x W] with F >= 2");
  }
  const std::size_t F = clip.dim(0), C = clip.dim(1), H = clip.dim(2), W = clip.dim(3);
  std::vector<double> cx(F), cy(F);
  for (std::size_t f = 0; f < F; ++f) {
    double m = 0, sx = 0, sy = 0;
    for (std::size_t y = 0; y < H; ++y) {
      for (std::size_t x = 0; x < W; ++x) {
        double v = 0;
        for (std::size_t c = 0; c < C; ++c) v += std::abs(double(clip[((f * C + c) * H + y) * W + x]));
        m += v;
        sx += v * double(x);
        sy += v * double(y);
      }
    }
    cx[f] = m > 0 ? sx / m : 0.5 * double(W - 1);
    cy[f] = m > 0 ? sy / m : 0.5 * double(H - 1);
  }
  Tensor flow({F - 1, H, W, 2});
  for (std::size_t f = 0; f + 1 < F; ++f) {
    for (std::size_t p = 0; p < H * W; ++p) {
      flow[(f * H * W + p) * 2] = static_cast<real>(cx[f + 1] - cx[f]);
      flow[(f * H * W + p) * 2 + 1] = static_cast<real>(cy[f + 1] - cy[f]);
    }
  }
  return flow;
}

FrameEmbedder::FrameEmbedder(std::size_t frame_size, std::size_t dim, std::uint64_t seed)
    : frame_size_(frame_size), dim_(dim) {
  Rng rng(seed);
  w_ = Tensor::randn({frame_size, dim}, rng, 1.0 / std::sqrt(double(frame_size)));
}

Tensor FrameEmbedder::embed(const Tensor& clip) const {
  const std::size_t F = clip.dim(0);
  if (clip.numel() != F * frame_size_) {
    fail(ErrorKind::Dimension, "FrameEmbedder: clip " + shape_str(clip.shape()) + " does not hold frames of " +
                                   std::to_string(frame_size_) + " values");
  }
  Tensor out({F, dim_});
  kernels::gemm({clip.data(), w_.data(), out.data(), F, dim_, frame_size_});
  for (std::size_t f = 0; f < F; ++f) {
    const double n = l2_norm(out.row(f));
    if (n > 0) {
      for (auto& v : out.row(f)) v = static_cast<real>(v / n);
    }
  }
  return out;
}

namespace {

std::string number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_token(const std::string& s, const char* what) {
  if (s.empty() || s.find_first_of(" =\n\t") != std::string::npos) {
    fail(ErrorKind::Format, std::string("metric report: invalid ") + what + " '" + s + "'");
  }
}

}  // namespace

std::string format_reports(const std::vector<MetricReport>& reports) {
  std::string out;
  for (const auto& r : reports) {
    check_token(r.name, "name");
    out += "name=" + r.name + " value=" + number(r.value) + " std=" + number(r.std) +
           " n_trials=" + std::to_string(r.n_trials);
    for (const auto& [k, v] : r.config) {
      check_token(k, "config key");
      check_token(v, "config value");
      out += " config." + k + "=" + v;
    }
    out += "\n";
  }
  return out;
}

std::vector<MetricReport> parse_reports(const std::string& text) {
  std::vector<MetricReport> out;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string field;
    MetricReport r;
    bool has_name = false;
    while (fields >> field) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) fail(ErrorKind::Format, "metric report: field without '=': " + field);
      const std::string key = field.substr(0, eq), val = field.substr(eq + 1);
      if (key == "name") {
        r.name = val;
        has_name = true;
      } else if (key == "value") {
        r.value = std::strtod(val.c_str(), nullptr);
      } else if (key == "std") {
        r.std = std::strtod(val.c_str(), nullptr);
      } else if (key == "n_trials") {
        r.n_trials = std::stoull(val);
      } else if (key.rfind("config.", 0) == 0) {
        r.config[key.substr(7)] = val;
      } else {
        fail(ErrorKind::Format, "metric report: unknown field '" + key + "'");
      }
    }
    if (!has_name) fail(ErrorKind::Format, "metric report: line without a name");
    out.push_back(std::move(r));
  }
  return out;
}

MOM_NS_END
