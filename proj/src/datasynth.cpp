// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#include "mom/datasynth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mom/rng.hpp"

MOM_NS_BEGIN

void GeneratorConfig::validate() const {
  if (!latent_dim || !n_voxels || !d_clip || !d_act || !n_classes || !channels || !height || !width) {
    fail(ErrorKind::Config, "generator: dims must be positive");
  }
  if (n_train == 0 || n_test == 0) fail(ErrorKind::Config, "generator: n_train and n_test must be positive");
  if (frames < 2) fail(ErrorKind::Config, "generator: need at least 2 frames");
  if (n_voxels < latent_dim) fail(ErrorKind::Config, "generator: n_voxels must be >= latent_dim");
  if (!(signal_noise_sigma >= 0) || !(embed_noise_sigma >= 0)) {
    fail(ErrorKind::Config, "generator: noise sigmas must be >= 0");
  }
}

namespace {

Tensor gaussian(Shape shape, Rng& rng, double stddev) { return Tensor::randn(std::move(shape), rng, stddev); }

// Columns orthonormalized by modified Gram-Schmidt, then scaled.
Tensor orthogonal_columns(std::size_t rows, std::size_t cols, Rng& rng, double scale) {
  std::vector<double> m(rows * cols);
  for (auto& v : m) v = rng.normal();
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t k = 0; k < j; ++k) {
      double d = 0;
      for (std::size_t i = 0; i < rows; ++i) d += m[i * cols + j] * m[i * cols + k];
      for (std::size_t i = 0; i < rows; ++i) m[i * cols + j] -= d * m[i * cols + k];
    }
    double n = 0;
    for (std::size_t i = 0; i < rows; ++i) n += m[i * cols + j] * m[i * cols + j];
    n = std::sqrt(n);
    for (std::size_t i = 0; i < rows; ++i) m[i * cols + j] /= n;
  }
  Tensor t({rows, cols});
  for (std::size_t i = 0; i < m.size(); ++i) t[i] = static_cast<real>(m[i] * scale);
  return t;
}

std::vector<double> matvec(const Tensor& m, const Tensor& z) {
  const std::size_t rows = m.dim(0), cols = m.dim(1);
  std::vector<double> out(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < cols; ++j) s += double(m.at(i, j)) * z[j];
    out[i] = s;
  }
  return out;
}

void write_unit(std::vector<double> v, real* out) {
  double n = 0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<real>(n > 0 ? v[i] / n : 0.0);
}

// M z + sigma * noise (or pure noise when the modality is uninformative),
// normalized into `out`.
void embed(const Tensor& m, const Tensor& z, bool informative, double sigma, Rng& rng, real* out,
           const std::vector<double>* extra = nullptr) {
  std::vector<double> v(m.dim(0));
  if (informative) {
    v = matvec(m, z);
    if (extra) {
      for (std::size_t i = 0; i < v.size(); ++i) v[i] += (*extra)[i];
    }
    for (auto& x : v) x += sigma * rng.normal();
  } else {
    for (auto& x : v) x = rng.normal();
  }
  write_unit(std::move(v), out);
}

}  // namespace

GeneratorModel make_generator_model(const GeneratorConfig& c) {
  c.validate();
  const Rng root(c.seed);
  const std::size_t k = c.latent_dim;
  const double s = 1.0 / std::sqrt(double(k));
  GeneratorModel g;
  Rng r1 = root.split(1), r2 = root.split(2), r3 = root.split(3), r4 = root.split(4), r5 = root.split(5),
      r6 = root.split(6), r7 = root.split(7), r8 = root.split(8);
  g.a = orthogonal_columns(c.n_voxels, k, r1, std::sqrt(double(c.n_voxels) / double(k)));
  g.m_txt = gaussian({c.d_clip, k}, r2, s);
  g.m_img = gaussian({c.d_clip, k}, r3, s);
  g.m_act = gaussian({c.d_act, k}, r4, s);
  g.b_pos = gaussian({c.d_clip, 2}, r5, 0.1);
  g.u_cls = gaussian({c.n_classes, k}, r6, 1.0);
  g.v_vel = gaussian({2, k}, r7, 0.5 * s);
  g.w_color = gaussian({c.channels, k}, r8, 1.5 * s);
  return g;
}

SignalSample sample_from_latent(const GeneratorModel& g, const GeneratorConfig& c, const Tensor& z, Rng& rng) {
  require_shape(z, {c.latent_dim}, "latent");
  SignalSample s;
  s.latent = z;

  s.signal = Tensor({c.n_voxels});
  const auto az = matvec(g.a, z);
  for (std::size_t i = 0; i < c.n_voxels; ++i) {
    s.signal[i] = static_cast<real>(az[i] + c.signal_noise_sigma * rng.normal());
  }

  const auto vel = matvec(g.v_vel, z);
  const double dx = std::clamp(vel[0], -kMaxSpeed, kMaxSpeed);
  const double dy = std::clamp(vel[1], -kMaxSpeed, kMaxSpeed);
  const double mid = 0.5 * double(c.frames - 1);

  s.e_txt = Tensor({c.d_clip});
  embed(g.m_txt, z, c.txt_informative, c.embed_noise_sigma, rng, s.e_txt.data());
  s.e_img = Tensor({c.frames, c.d_clip});
  for (std::size_t f = 0; f < c.frames; ++f) {
    const double off_x = dx * (double(f) - mid), off_y = dy * (double(f) - mid);
    std::vector<double> pos(c.d_clip);
    for (std::size_t i = 0; i < c.d_clip; ++i) pos[i] = g.b_pos.at(i, 0) * off_x + g.b_pos.at(i, 1) * off_y;
    embed(g.m_img, z, c.img_informative, c.embed_noise_sigma, rng, s.e_img.row(f).data(), &pos);
  }
  s.e_act = Tensor({c.d_act});
  embed(g.m_act, z, c.act_informative, c.embed_noise_sigma, rng, s.e_act.data());

  s.labels = Tensor({c.n_classes});
  std::size_t best = 0;
  double best_score = -INFINITY;
  for (std::size_t cl = 0; cl < c.n_classes; ++cl) {
    double dotp = 0, norm = 0;
    for (std::size_t j = 0; j < c.latent_dim; ++j) {
      dotp += double(g.u_cls.at(cl, j)) * z[j];
      norm += double(g.u_cls.at(cl, j)) * g.u_cls.at(cl, j);
    }
    const double score = dotp / std::sqrt(norm);
    if (score > kLabelThreshold) s.labels[cl] = 1;
    if (score > best_score) {
      best_score = score;
      best = cl;
    }
  }
  s.labels[best] = 1;

  s.clip = Tensor(c.clip_shape());
  const auto color = matvec(g.w_color, z);
  const double cx = 0.5 * double(c.width - 1), cy = 0.5 * double(c.height - 1);
  const double inv2s2 = 1.0 / (2.0 * kBlobSigma * kBlobSigma);
  for (std::size_t f = 0; f < c.frames; ++f) {
    const double px = cx + dx * (double(f) - mid), py = cy + dy * (double(f) - mid);
    for (std::size_t y = 0; y < c.height; ++y) {
      for (std::size_t x = 0; x < c.width; ++x) {
        const double rx = double(x) - px, ry = double(y) - py;
        const double blob = std::exp(-(rx * rx + ry * ry) * inv2s2);
        for (std::size_t ch = 0; ch < c.channels; ++ch) {
          const std::size_t at = ((f * c.channels + ch) * c.height + y) * c.width + x;
          s.clip[at] = static_cast<real>(std::tanh(color[ch]) * blob);
        }
      }
    }
  }
  s.flow_gt = Tensor({c.frames - 1, c.height, c.width, 2});
  for (std::size_t i = 0; i < s.flow_gt.numel(); i += 2) {
    s.flow_gt[i] = static_cast<real>(dx);
    s.flow_gt[i + 1] = static_cast<real>(dy);
  }
  return s;
}

Dataset generate(const GeneratorConfig& config) {
  config.validate();
  const GeneratorModel g = make_generator_model(config);
  const Rng root(config.seed);
  Dataset d;
  d.config = config;
  auto make = [&](std::uint64_t split, std::size_t n, std::vector<SignalSample>& out) {
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      Rng rng = root.split((split << 32) | i);
      const Tensor z = Tensor::randn({config.latent_dim}, rng);
      out[i] = sample_from_latent(g, config, z, rng);
    }
  };
  make(1, config.n_train, d.train);
  make(2, config.n_test, d.test);
  return d;
}

Tensor warp_frame(const Tensor& frame, const Tensor& flow) {
  if (frame.rank() != 3 || flow.rank() != 3 || flow.dim(2) != 2 || flow.dim(0) != frame.dim(1) ||
      flow.dim(1) != frame.dim(2)) {
    fail(ErrorKind::Dimension, "warp_frame: frame " + shape_str(frame.shape()) + ", flow " + shape_str(flow.shape()));
  }
  const std::size_t C = frame.dim(0), H = frame.dim(1), W = frame.dim(2);
  Tensor out(frame.shape());
  auto px = [&](std::size_t ch, long y, long x) -> double {
    if (y < 0 || x < 0 || y >= long(H) || x >= long(W)) return 0.0;
    return frame[(ch * H + std::size_t(y)) * W + std::size_t(x)];
  };
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) {
      const double sx = double(x) - flow[(y * W + x) * 2], sy = double(y) - flow[(y * W + x) * 2 + 1];
      const long x0 = long(std::floor(sx)), y0 = long(std::floor(sy));
      const double fx = sx - double(x0), fy = sy - double(y0);
      for (std::size_t ch = 0; ch < C; ++ch) {
        const double v = (1 - fy) * ((1 - fx) * px(ch, y0, x0) + fx * px(ch, y0, x0 + 1)) +
                         fy * ((1 - fx) * px(ch, y0 + 1, x0) + fx * px(ch, y0 + 1, x0 + 1));
        out[(ch * H + y) * W + x] = static_cast<real>(v);
      }
    }
  }
  return out;
}

SuperclassMap::SuperclassMap() : names_(kSuperclassNames.begin(), kSuperclassNames.end()) {}

namespace {

std::string trim_lower(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  s = s.substr(b, e - b + 1);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return char(std::tolower(ch)); });
  return s;
}

}  // namespace

std::size_t SuperclassMap::index_of(const std::string& class_name) const {
  const auto it = std::find(names_.begin(), names_.end(), class_name);
  if (it == names_.end()) fail(ErrorKind::Config, "unknown superclass '" + class_name + "'");
  return std::size_t(it - names_.begin());
}

SuperclassMap SuperclassMap::parse(const std::string& text) {
  SuperclassMap m;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim_lower(line).empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) {
      fail(ErrorKind::Config, "superclass map line " + std::to_string(line_no) + ": expected 'keyword: class'");
    }
    const std::string key = trim_lower(line.substr(0, colon));
    const std::string cls = trim_lower(line.substr(colon + 1));
    if (key.empty()) fail(ErrorKind::Config, "superclass map line " + std::to_string(line_no) + ": empty keyword");
    m.keywords_[key] = m.index_of(cls);
  }
  return m;
}

SuperclassMap SuperclassMap::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorKind::Io, "cannot open superclass map '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

SuperclassMap SuperclassMap::builtin() { return load(std::string(MOM_DATA_DIR) + "/superclasses.txt"); }

std::size_t SuperclassMap::lookup(const std::string& keyword) const {
  const auto it = keywords_.find(trim_lower(keyword));
  return it == keywords_.end() ? index_of("others") : it->second;
}

Tensor map_keywords(const std::vector<std::string>& words, const SuperclassMap& map) {
  Tensor out({map.names().size()});
  for (const auto& w : words) out[map.lookup(w)] = 1;
  return out;
}

MOM_NS_END
