// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#include "mom/config.hpp"

#include <charconv>
#include <functional>
#include <sstream>

MOM_NS_BEGIN

BrainModelConfig RunConfig::brain() const {
  BrainModelConfig b;
  b.n_voxels = data.n_voxels;
  b.n_layers = model_layers;
  b.d_model = model_d_model;
  b.n_tokens = model_tokens;
  b.d_clip = data.d_clip;
  b.d_act = data.d_act;
  b.n_classes = data.n_classes;
  b.n_heads = model_heads;
  return b;
}

FusionConfig RunConfig::fusion() const {
  FusionConfig f;
  f.d_model = model_d_model;
  f.d_clip = data.d_clip;
  f.d_act = data.d_act;
  f.n_heads = fusion_heads;
  f.alpha = fusion_alpha;
  return f;
}

DecoderConfig RunConfig::decoder() const {
  DecoderConfig d;
  d.frames = data.frames;
  d.channels = data.channels;
  d.height = data.height;
  d.width = data.width;
  d.d_cond = data.d_clip;
  d.hidden = decoder_hidden;
  d.n_heads = decoder_heads;
  d.timesteps = decoder_timesteps;
  d.beta_start = decoder_beta_start;
  d.beta_end = decoder_beta_end;
  return d;
}

namespace {

std::string in_out(const RunConfig& c, const std::string& path, const std::string& name) {
  if (!path.empty()) return path;
  return c.out_dir + "/" + name;
}

}  // namespace

std::string RunConfig::dataset_file() const { return in_out(*this, dataset_path, "dataset.momd"); }
std::string RunConfig::stage1_file() const { return in_out(*this, stage1_path, "stage1.momc"); }
std::string RunConfig::pool_file() const { return in_out(*this, pool_path, "pool.momp"); }
std::string RunConfig::stage2_file() const { return in_out(*this, stage2_path, "stage2.momc"); }
std::string RunConfig::recon_directory() const { return in_out(*this, recon_dir, "recon"); }
std::string RunConfig::report_file() const { return in_out(*this, report_path, "report.txt"); }

void RunConfig::validate() const {
  data.validate();
  brain().validate();
  decoder().validate();
  stage1.validate();
  if (top_k == 0) fail(ErrorKind::Config, "retrieval.k must be >= 1");
  for (const TrainOptions* t : {&train1, &train2}) {
    if (t->batch == 0) fail(ErrorKind::Config, "batch size must be >= 1");
    if (!(t->lr > 0)) fail(ErrorKind::Config, "learning rate must be > 0");
    if (t->pct_start <= 0 || t->pct_start >= 1) fail(ErrorKind::Config, "pct_start must lie in (0, 1)");
  }
  if (stage2.stage1 < 0 || stage2.diffusion < 0 || stage2.route < 0 || !(stage2.route_tau > 0)) {
    fail(ErrorKind::Config, "stage2 weights must be >= 0 and route_tau > 0");
  }
  if (reconstruct_split != "train" && reconstruct_split != "test") {
    fail(ErrorKind::Config, "reconstruct.split must be train or test");
  }
  if (eval_subset == 0 || eval_trials == 0 || eval_embed_dim == 0) {
    fail(ErrorKind::Config, "eval sizes must be positive");
  }
}

namespace {

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) fail(ErrorKind::Config, "config: bad value '" + v + "' for " + key);
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(ErrorKind::Config, "config: bad boolean '" + v + "' for " + key);
}

std::string show(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, p);
}

struct Key {
  std::string name;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define MOM_SIZE_KEY(k, field)                                                            \
  Key {                                                                                   \
    k, [](const RunConfig& c) { return std::to_string(c.field); },                        \
        [](RunConfig& c, const std::string& v) { c.field = parse_number<std::size_t>(k, v); } \
  }
#define MOM_U64_KEY(k, field)                                                               \
  Key {                                                                                     \
    k, [](const RunConfig& c) { return std::to_string(c.field); },                          \
        [](RunConfig& c, const std::string& v) { c.field = parse_number<std::uint64_t>(k, v); } \
  }
#define MOM_REAL_KEY(k, field)                                                       \
  Key {                                                                              \
    k, [](const RunConfig& c) { return show(c.field); },                             \
        [](RunConfig& c, const std::string& v) { c.field = parse_number<double>(k, v); } \
  }
#define MOM_BOOL_KEY(k, field)                                                          \
  Key {                                                                                 \
    k, [](const RunConfig& c) { return std::string(c.field ? "true" : "false"); },      \
        [](RunConfig& c, const std::string& v) { c.field = parse_bool(k, v); }          \
  }
#define MOM_STR_KEY(k, field) \
  Key { k, [](const RunConfig& c) { return c.field; }, [](RunConfig& c, const std::string& v) { c.field = v; } }

#define MOM_TRAIN_KEYS(prefix, t)                                                                        \
  MOM_SIZE_KEY(prefix ".steps", t.steps), MOM_SIZE_KEY(prefix ".batch", t.batch),                        \
      MOM_REAL_KEY(prefix ".lr", t.lr), MOM_REAL_KEY(prefix ".weight_decay", t.weight_decay),            \
      MOM_REAL_KEY(prefix ".pct_start", t.pct_start), MOM_REAL_KEY(prefix ".clip_norm", t.clip_norm),    \
      MOM_SIZE_KEY(prefix ".log_every", t.log_every)

void apply_preset(RunConfig& c, const std::string& name) {
  if (name == "desk") {
    c.train1.steps = 2000;
    c.train1.batch = 32;
    c.train2.steps = 2000;
    c.train2.batch = 16;
    c.train1.lr = 1e-3;
    c.train2.lr = 1e-3;
  } else if (name == "full") {
    // Stage 2 runs 20 epochs over the training set.
    c.train1.steps = 8000;
    c.train1.batch = 144;
    c.train2.batch = 32;
    c.train2.steps = 20 * ((c.data.n_train + c.train2.batch - 1) / c.train2.batch);
    c.train1.lr = 1e-4;
    c.train2.lr = 1e-6;
  } else {
    fail(ErrorKind::Config, "config: unknown preset '" + name + "' (expected desk or full)");
  }
  c.preset = name;
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      Key{"preset", [](const RunConfig& c) { return c.preset; },
          [](RunConfig& c, const std::string& v) { apply_preset(c, v); }},
      MOM_U64_KEY("seed", seed),
      MOM_SIZE_KEY("data.latent_dim", data.latent_dim),
      MOM_SIZE_KEY("data.n_voxels", data.n_voxels),
      MOM_SIZE_KEY("data.d_clip", data.d_clip),
      MOM_SIZE_KEY("data.d_act", data.d_act),
      MOM_SIZE_KEY("data.n_classes", data.n_classes),
      MOM_REAL_KEY("data.signal_noise_sigma", data.signal_noise_sigma),
      MOM_REAL_KEY("data.embed_noise_sigma", data.embed_noise_sigma),
      MOM_SIZE_KEY("data.n_train", data.n_train),
      MOM_SIZE_KEY("data.n_test", data.n_test),
      MOM_SIZE_KEY("data.frames", data.frames),
      MOM_SIZE_KEY("data.channels", data.channels),
      MOM_SIZE_KEY("data.height", data.height),
      MOM_SIZE_KEY("data.width", data.width),
      MOM_BOOL_KEY("data.txt_informative", data.txt_informative),
      MOM_BOOL_KEY("data.img_informative", data.img_informative),
      MOM_BOOL_KEY("data.act_informative", data.act_informative),
      MOM_SIZE_KEY("model.n_layers", model_layers),
      MOM_SIZE_KEY("model.d_model", model_d_model),
      MOM_SIZE_KEY("model.n_tokens", model_tokens),
      MOM_SIZE_KEY("model.n_heads", model_heads),
      MOM_SIZE_KEY("decoder.hidden", decoder_hidden),
      MOM_SIZE_KEY("decoder.n_heads", decoder_heads),
      MOM_SIZE_KEY("decoder.timesteps", decoder_timesteps),
      MOM_REAL_KEY("decoder.beta_start", decoder_beta_start),
      MOM_REAL_KEY("decoder.beta_end", decoder_beta_end),
      MOM_REAL_KEY("fusion.alpha", fusion_alpha),
      MOM_SIZE_KEY("fusion.n_heads", fusion_heads),
      MOM_SIZE_KEY("retrieval.k", top_k),
      MOM_REAL_KEY("stage1.tau", stage1.tau),
      MOM_REAL_KEY("stage1.lambda_action", stage1.lambda_action),
      MOM_REAL_KEY("stage1.lambda_cls", stage1.lambda_cls),
      MOM_REAL_KEY("stage1.focal_gamma", stage1.focal_gamma),
      MOM_REAL_KEY("stage1.focal_mix", stage1.focal_mix),
      MOM_BOOL_KEY("stage1.symmetric", stage1.symmetric_info_nce),
      MOM_REAL_KEY("stage2.stage1", stage2.stage1),
      MOM_REAL_KEY("stage2.diffusion", stage2.diffusion),
      MOM_REAL_KEY("stage2.route", stage2.route),
      MOM_REAL_KEY("stage2.route_tau", stage2.route_tau),
      MOM_TRAIN_KEYS("train1", train1),
      MOM_TRAIN_KEYS("train2", train2),
      MOM_SIZE_KEY("eval.trials", eval_trials),
      MOM_SIZE_KEY("eval.subset", eval_subset),
      MOM_SIZE_KEY("eval.embed_dim", eval_embed_dim),
      MOM_SIZE_KEY("reconstruct.limit", reconstruct_limit),
      MOM_STR_KEY("reconstruct.split", reconstruct_split),
      MOM_STR_KEY("paths.out", out_dir),
      MOM_STR_KEY("paths.dataset", dataset_path),
      MOM_STR_KEY("paths.stage1", stage1_path),
      MOM_STR_KEY("paths.pool", pool_path),
      MOM_STR_KEY("paths.merge_pool", merge_pool_path),
      MOM_STR_KEY("paths.stage2", stage2_path),
      MOM_STR_KEY("paths.recon", recon_dir),
      MOM_STR_KEY("paths.report", report_path),
  };
  return table;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void apply_setting(RunConfig& config, const std::string& key, const std::string& value) {
  for (const auto& k : keys()) {
    if (k.name == key) {
      k.set(config, value);
      return;
    }
  }
  fail(ErrorKind::Config, "config: unknown key '" + key + "'");
}

void apply_config_text(RunConfig& config, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::Config, "config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    apply_setting(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) fail(ErrorKind::Config, "override '" + assignment + "' is not key=value");
  apply_setting(config, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::vector<std::pair<std::string, std::string>> resolved_settings(const RunConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : keys()) out.emplace_back(k.name, k.get(config));
  return out;
}

std::string format_settings(const RunConfig& config) {
  std::string s;
  for (const auto& [k, v] : resolved_settings(config)) s += k + " = " + v + "\n";
  return s;
}

MOM_NS_END
