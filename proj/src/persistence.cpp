// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#include "mom/persistence.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

MOM_NS_BEGIN

namespace {

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(std::uint8_t(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(std::uint8_t(v >> (8 * i)));
  }
  void f32(real v) {
    const float f = static_cast<float>(v);
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    u32(u);
  }
  void f64(double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    u64(u);
  }
  void magic(const char* m) { bytes(m, 4); }
  void string(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void floats(const Tensor& t) {
    for (std::size_t i = 0; i < t.numel(); ++i) f32(t[i]);
  }
  void floats(std::span<const real> s) {
    for (real v : s) f32(v);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& data, const char* format) : data_(data), format_(format) {}

  std::uint64_t offset() const { return pos_; }
  bool at_end() const { return pos_ == data_.size(); }

  void need(std::uint64_t n, const std::string& what) {
    if (n > data_.size() - pos_) {
      throw FormatError(FormatIssue::Truncated, pos_,
                        std::string(format_) + ": truncated at byte offset " + std::to_string(pos_) + " reading " +
                            what + " (" + std::to_string(n) + " bytes needed, " +
                            std::to_string(data_.size() - pos_) + " available)");
    }
  }
  std::uint8_t u8(const std::string& what) {
    need(1, what);
    return data_[pos_++];
  }
  std::uint32_t u32(const std::string& what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(data_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64(const std::string& what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(data_[pos_++]) << (8 * i);
    return v;
  }
  double f64(const std::string& what) {
    const std::uint64_t u = u64(what);
    double v;
    std::memcpy(&v, &u, 8);
    return v;
  }
  real f32(const std::string& what) {
    const std::uint32_t u = u32(what);
    float f;
    std::memcpy(&f, &u, 4);
    return static_cast<real>(f);
  }
  std::string string(const std::string& what) {
    const std::uint32_t n = u32(what + " length");
    need(n, what);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void magic(const char* expected) {
    const std::uint64_t at = pos_;
    need(4, "magic");
    if (std::memcmp(data_.data() + pos_, expected, 4) != 0) {
      throw FormatError(FormatIssue::BadMagic, at,
                        std::string(format_) + ": bad magic, expected '" + expected + "'");
    }
    pos_ += 4;
  }
  void version() {
    const std::uint64_t at = pos_;
    const std::uint32_t v = u32("version");
    if (v != kFormatVersion) {
      throw FormatError(FormatIssue::BadVersion, at,
                        std::string(format_) + ": unsupported version " + std::to_string(v) + " (expected " +
                            std::to_string(kFormatVersion) + ")");
    }
  }
  Tensor floats(Shape shape, const std::string& what) {
    const std::size_t n = shape_numel(shape);
    if (n > (data_.size() - pos_) / 4) need(std::uint64_t(n) * 4, what);
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < n; ++i) t[i] = f32(what);
    return t;
  }
  [[noreturn]] void corrupt(const std::string& msg) const {
    throw FormatError(FormatIssue::Corrupt, pos_, std::string(format_) + ": " + msg);
  }
  void expect_end() const {
    if (!at_end()) corrupt(std::to_string(data_.size() - pos_) + " trailing bytes");
  }

 private:
  const std::vector<std::uint8_t>& data_;
  const char* format_;
  std::uint64_t pos_ = 0;
};

std::size_t checked_dim(std::uint64_t v, Reader& r, const std::string& what) {
  if (v == 0 || v > (std::uint64_t(1) << 32)) r.corrupt("implausible " + what + " " + std::to_string(v));
  return static_cast<std::size_t>(v);
}

}  // namespace

std::vector<std::uint8_t> encode_pool(const MemoryPool& pool) {
  Writer w;
  w.magic("MOMP");
  w.u32(kFormatVersion);
  w.u64(pool.size());
  w.u32(static_cast<std::uint32_t>(pool.d_clip()));
  w.u32(static_cast<std::uint32_t>(pool.d_act()));
  w.u32(kEndianMarker);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    w.u64(pool.id(i));
    w.string(pool.source_tag(i));
    w.floats(pool.e_txt(i));
    w.floats(pool.e_img(i));
    w.floats(pool.e_act(i));
  }
  return w.take();
}

MemoryPool decode_pool(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes, "pool file");
  r.magic("MOMP");
  r.version();
  const std::uint64_t n = r.u64("entry count");
  const std::size_t d_clip = checked_dim(r.u32("d_clip"), r, "d_clip");
  const std::size_t d_act = checked_dim(r.u32("d_act"), r, "d_act");
  const std::uint64_t marker_at = r.offset();
  if (r.u32("endianness marker") != kEndianMarker) {
    throw FormatError(FormatIssue::BadEndianness, marker_at, "pool file: endianness marker mismatch");
  }
  MemoryPool pool(d_clip, d_act);
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::string label = "entry " + std::to_string(i);
    MemoryEntry e;
    e.id = r.u64(label + " id");
    e.source_tag = r.string(label + " tag");
    e.e_txt = r.floats({d_clip}, label + " e_txt");
    e.e_img = r.floats({d_clip}, label + " e_img");
    e.e_act = r.floats({d_act}, label + " e_act");
    try {
      pool.add(e);
    } catch (const Error& err) {
      r.corrupt(label + ": " + err.what());
    }
  }
  r.expect_end();
  return pool;
}

void save_pool(const MemoryPool& pool, const std::string& path) { write_file(path, encode_pool(pool)); }
MemoryPool load_pool(const std::string& path) { return decode_pool(read_file(path)); }

std::vector<std::uint8_t> encode_checkpoint(const std::vector<NamedTensor>& blocks) {
  Writer w;
  w.magic("MOMC");
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(blocks.size()));
  for (const auto& b : blocks) {
    w.string(b.name);
    w.u32(static_cast<std::uint32_t>(b.value.rank()));
    for (std::size_t d : b.value.shape()) w.u64(d);
    w.floats(b.value);
  }
  return w.take();
}

std::vector<NamedTensor> decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes, "checkpoint file");
  r.magic("MOMC");
  r.version();
  const std::uint32_t n = r.u32("block count");
  std::vector<NamedTensor> out;
  for (std::uint32_t i = 0; i < n; ++i) {
    NamedTensor b;
    b.name = r.string("block " + std::to_string(i) + " name");
    const std::uint32_t rank = r.u32(b.name + " rank");
    if (rank == 0 || rank > 8) r.corrupt("block '" + b.name + "' has rank " + std::to_string(rank));
    Shape shape;
    for (std::uint32_t k = 0; k < rank; ++k) shape.push_back(checked_dim(r.u64(b.name + " dims"), r, "dim"));
    b.value = r.floats(shape, b.name + " data");
    out.push_back(std::move(b));
  }
  r.expect_end();
  return out;
}

void save_checkpoint(const ParamSet& params, const std::string& path) {
  std::vector<NamedTensor> blocks;
  for (const auto& p : params.items()) blocks.push_back({p.name(), p.value()});
  write_file(path, encode_checkpoint(blocks));
}

std::vector<NamedTensor> load_checkpoint(const std::string& path) { return decode_checkpoint(read_file(path)); }

void apply_checkpoint(const std::vector<NamedTensor>& blocks, ParamSet& params, bool strict) {
  std::vector<const NamedTensor*> by_param(params.size(), nullptr);
  for (const auto& b : blocks) {
    bool found = false;
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (params.items()[i].name() == b.name) {
        by_param[i] = &b;
        found = true;
        break;
      }
    }
    if (!found && strict) {
      throw FormatError(FormatIssue::DimMismatch, 0, "checkpoint: unexpected block '" + b.name + "'");
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params.items()[i];
    if (!by_param[i]) throw FormatError(FormatIssue::DimMismatch, 0, "checkpoint: missing block '" + p.name() + "'");
    if (by_param[i]->value.shape() != p.shape()) {
      throw FormatError(FormatIssue::DimMismatch, 0,
                        "checkpoint: block '" + p.name() + "' has shape " + shape_str(by_param[i]->value.shape()) +
                            ", model expects " + shape_str(p.shape()));
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) params.items()[i].mutable_value() = by_param[i]->value;
}

namespace {

void write_config(Writer& w, const GeneratorConfig& c) {
  for (std::uint64_t v : {std::uint64_t(c.latent_dim), std::uint64_t(c.n_voxels), std::uint64_t(c.d_clip),
                          std::uint64_t(c.d_act), std::uint64_t(c.n_classes)}) {
    w.u64(v);
  }
  w.f64(c.signal_noise_sigma);
  w.f64(c.embed_noise_sigma);
  for (std::uint64_t v : {std::uint64_t(c.n_train), std::uint64_t(c.n_test), c.seed, std::uint64_t(c.frames),
                          std::uint64_t(c.channels), std::uint64_t(c.height), std::uint64_t(c.width)}) {
    w.u64(v);
  }
  w.u8(c.txt_informative);
  w.u8(c.img_informative);
  w.u8(c.act_informative);
}

GeneratorConfig read_config(Reader& r) {
  GeneratorConfig c;
  c.latent_dim = checked_dim(r.u64("latent_dim"), r, "latent_dim");
  c.n_voxels = checked_dim(r.u64("n_voxels"), r, "n_voxels");
  c.d_clip = checked_dim(r.u64("d_clip"), r, "d_clip");
  c.d_act = checked_dim(r.u64("d_act"), r, "d_act");
  c.n_classes = checked_dim(r.u64("n_classes"), r, "n_classes");
  c.signal_noise_sigma = r.f64("signal_noise_sigma");
  c.embed_noise_sigma = r.f64("embed_noise_sigma");
  c.n_train = checked_dim(r.u64("n_train"), r, "n_train");
  c.n_test = checked_dim(r.u64("n_test"), r, "n_test");
  c.seed = r.u64("seed");
  c.frames = checked_dim(r.u64("frames"), r, "frames");
  c.channels = checked_dim(r.u64("channels"), r, "channels");
  c.height = checked_dim(r.u64("height"), r, "height");
  c.width = checked_dim(r.u64("width"), r, "width");
  c.txt_informative = r.u8("txt flag") != 0;
  c.img_informative = r.u8("img flag") != 0;
  c.act_informative = r.u8("act flag") != 0;
  try {
    c.validate();
  } catch (const Error& e) {
    r.corrupt(std::string("invalid generator config: ") + e.what());
  }
  return c;
}

struct SampleShapes {
  Shape signal, e_txt, e_img, e_act, labels, clip, flow, latent;
  explicit SampleShapes(const GeneratorConfig& c)
      : signal{c.n_voxels},
        e_txt{c.d_clip},
        e_img{c.frames, c.d_clip},
        e_act{c.d_act},
        labels{c.n_classes},
        clip(c.clip_shape()),
        flow{c.frames - 1, c.height, c.width, 2},
        latent{c.latent_dim} {}
};

}  // namespace

std::vector<std::uint8_t> encode_dataset(const Dataset& d) {
  const SampleShapes shapes(d.config);
  Writer w;
  w.magic("MOMD");
  w.u32(kFormatVersion);
  write_config(w, d.config);
  w.u64(d.train.size());
  w.u64(d.test.size());
  for (const auto* split : {&d.train, &d.test}) {
    for (const auto& s : *split) {
      require_shape(s.signal, shapes.signal, "signal");
      require_shape(s.e_txt, shapes.e_txt, "e_txt");
      require_shape(s.e_img, shapes.e_img, "e_img");
      require_shape(s.e_act, shapes.e_act, "e_act");
      require_shape(s.labels, shapes.labels, "labels");
      require_shape(s.clip, shapes.clip, "clip");
      require_shape(s.flow_gt, shapes.flow, "flow_gt");
      require_shape(s.latent, shapes.latent, "latent");
      for (const Tensor* t : {&s.signal, &s.e_txt, &s.e_img, &s.e_act, &s.labels, &s.clip, &s.flow_gt, &s.latent}) {
        w.floats(*t);
      }
    }
  }
  return w.take();
}

Dataset decode_dataset(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes, "dataset file");
  r.magic("MOMD");
  r.version();
  Dataset d;
  d.config = read_config(r);
  const std::uint64_t n_train = r.u64("train count"), n_test = r.u64("test count");
  if (n_train != d.config.n_train || n_test != d.config.n_test) {
    throw FormatError(FormatIssue::DimMismatch, r.offset(), "dataset file: sample counts disagree with header");
  }
  const SampleShapes sh(d.config);
  for (auto* split : {&d.train, &d.test}) {
    const std::uint64_t n = split == &d.train ? n_train : n_test;
    for (std::uint64_t i = 0; i < n; ++i) {
      SignalSample s;
      const std::string label = "sample " + std::to_string(i);
      s.signal = r.floats(sh.signal, label + " signal");
      s.e_txt = r.floats(sh.e_txt, label + " e_txt");
      s.e_img = r.floats(sh.e_img, label + " e_img");
      s.e_act = r.floats(sh.e_act, label + " e_act");
      s.labels = r.floats(sh.labels, label + " labels");
      s.clip = r.floats(sh.clip, label + " clip");
      s.flow_gt = r.floats(sh.flow, label + " flow_gt");
      s.latent = r.floats(sh.latent, label + " latent");
      split->push_back(std::move(s));
    }
  }
  r.expect_end();
  return d;
}

void save_dataset(const Dataset& d, const std::string& path) { write_file(path, encode_dataset(d)); }
Dataset load_dataset(const std::string& path) { return decode_dataset(read_file(path)); }

std::vector<std::uint8_t> encode_clip(const Tensor& clip) {
  if (clip.rank() != 4) fail(ErrorKind::Dimension, "clip must be [F x C x H x W], got " + shape_str(clip.shape()));
  Writer w;
  w.magic("MOMV");
  w.u32(kFormatVersion);
  for (std::size_t d : clip.shape()) w.u32(static_cast<std::uint32_t>(d));
  w.floats(clip);
  return w.take();
}

Tensor decode_clip(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes, "clip file");
  r.magic("MOMV");
  r.version();
  Shape shape;
  for (const char* n : {"F", "C", "H", "W"}) shape.push_back(checked_dim(r.u32(n), r, n));
  Tensor t = r.floats(shape, "clip data");
  r.expect_end();
  return t;
}

void save_clip(const Tensor& clip, const std::string& path) { write_file(path, encode_clip(clip)); }
Tensor load_clip(const std::string& path) { return decode_clip(read_file(path)); }

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::Io, "cannot open '" + path + "' for reading");
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorKind::Io, "cannot open '" + tmp + "' for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) fail(ErrorKind::Io, "write to '" + tmp + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::Io, "cannot move '" + tmp + "' to '" + path + "': " + ec.message());
}

MOM_NS_END
