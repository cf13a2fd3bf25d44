// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#include "mom/commands.hpp"

#include <cstdio>
#include <filesystem>

#include "mom/persistence.hpp"

MOM_NS_BEGIN

namespace {

constexpr std::uint64_t kReconstructStream = 401;

void ensure_parent(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(parent, ec);
  if (ec) fail(ErrorKind::Io, "cannot create directory " + parent.string() + ": " + ec.message());
}

StepCallback step_logger(const TrainOptions& opt, std::ostream& log) {
  return [&opt, &log](const StepLog& s) {
    if (opt.log_every == 0) return;
    if (s.step % opt.log_every == 0 || s.step + 1 == opt.steps) log << format_step(s) << '\n' << std::flush;
  };
}

const std::vector<SignalSample>& split_of(const Dataset& d, const std::string& split) {
  return split == "train" ? d.train : d.test;
}

}  // namespace

RunConfig with_dataset(const RunConfig& config, const Dataset& dataset) {
  RunConfig c = config;
  c.data = dataset.config;
  c.validate();
  return c;
}

std::string clip_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "clip_%05zu.momv", index);
  return buf;
}

Dataset cmd_gen(const RunConfig& config) {
  config.validate();
  Dataset d = generate(config.data);
  ensure_parent(config.dataset_file());
  save_dataset(d, config.dataset_file());
  log_info("gen: wrote " + config.dataset_file() + " (" + std::to_string(d.train.size()) + " train, " +
           std::to_string(d.test.size()) + " test)");
  return d;
}

std::vector<StepLog> cmd_train_stage1(const RunConfig& config, std::ostream& log) {
  const Dataset d = load_dataset(config.dataset_file());
  const RunConfig c = with_dataset(config, d);
  MomModel model(c);
  auto logs = train_stage1(model.brain, d.train, c.stage1, c.train1, c.seed, step_logger(c.train1, log));
  ensure_parent(c.stage1_file());
  save_checkpoint(model.brain.params(), c.stage1_file());
  log_info("train-stage1: wrote " + c.stage1_file());
  return logs;
}

MemoryPool cmd_build_pool(const RunConfig& config) {
  const Dataset d = load_dataset(config.dataset_file());
  const RunConfig c = with_dataset(config, d);
  MomModel model(c);
  apply_checkpoint(load_checkpoint(c.stage1_file()), model.brain.params());
  MemoryPool pool = build_pool(model.brain, d.train, "train");
  if (!c.merge_pool_path.empty()) pool = pool_merge(load_pool(c.merge_pool_path), pool);
  ensure_parent(c.pool_file());
  save_pool(pool, c.pool_file());
  log_info("build-pool: wrote " + c.pool_file() + " (" + std::to_string(pool.size()) + " entries)");
  return pool;
}

std::vector<StepLog> cmd_train_stage2(const RunConfig& config, std::ostream& log) {
  const Dataset d = load_dataset(config.dataset_file());
  const RunConfig c = with_dataset(config, d);
  MomModel model(c);
  apply_checkpoint(load_checkpoint(c.stage1_file()), model.brain.params());
  const MemoryPool pool = load_pool(c.pool_file());
  auto logs = train_stage2(model, d.train, pool, c.stage1, c.stage2, c.train2, c.seed, step_logger(c.train2, log));
  ensure_parent(c.stage2_file());
  save_checkpoint(model.all_params(), c.stage2_file());
  log_info("train-stage2: wrote " + c.stage2_file());
  return logs;
}

MomModel load_model(const RunConfig& config) {
  MomModel model(config);
  ParamSet all = model.all_params();
  apply_checkpoint(load_checkpoint(config.stage2_file()), all);
  return model;
}

std::vector<std::string> cmd_reconstruct(const RunConfig& config) {
  const Dataset d = load_dataset(config.dataset_file());
  const RunConfig c = with_dataset(config, d);
  const MomModel model = load_model(c);
  const MemoryPool pool = load_pool(c.pool_file());
  const auto& samples = split_of(d, c.reconstruct_split);
  const std::size_t n = c.reconstruct_limit ? std::min(c.reconstruct_limit, samples.size()) : samples.size();
  const std::string dir = c.recon_directory();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create directory " + dir + ": " + ec.message());
  const Rng base = Rng(c.seed).split(kReconstructStream);
  std::vector<std::string> paths;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = base.split(i);
    const Reconstruction r = reconstruct(model, pool, samples[i].signal, rng);
    paths.push_back(dir + "/" + clip_file_name(i));
    save_clip(r.clip, paths.back());
    std::string ids;
    for (auto id : r.retrieval.top_ids) ids += (ids.empty() ? "" : ",") + std::to_string(id);
    log_info("reconstruct: " + paths.back() + " retrieved " + ids);
  }
  return paths;
}

std::vector<MetricReport> cmd_evaluate(const RunConfig& config) {
  const Dataset d = load_dataset(config.dataset_file());
  const RunConfig c = with_dataset(config, d);
  MomModel model(c);
  if (std::filesystem::exists(c.stage2_file())) {
    ParamSet all = model.all_params();
    apply_checkpoint(load_checkpoint(c.stage2_file()), all);
  } else {
    apply_checkpoint(load_checkpoint(c.stage1_file()), model.brain.params());
  }
  EvalInputs in;
  in.brain = &model.brain;
  in.test = &d.test;
  in.trials = c.eval_trials;
  in.subset = c.eval_subset;
  in.embed_dim = c.eval_embed_dim;
  in.seed = c.seed;
  std::vector<MetricReport> reports = evaluate(in);

  // Clip metrics over whatever prefix of the test set has reconstructions.
  std::vector<Tensor> recons;
  for (std::size_t i = 0; i < d.test.size(); ++i) {
    const std::string p = c.recon_directory() + "/" + clip_file_name(i);
    if (!std::filesystem::exists(p)) break;
    recons.push_back(load_clip(p));
  }
  if (!recons.empty()) {
    const std::vector<SignalSample> prefix(d.test.begin(), d.test.begin() + static_cast<std::ptrdiff_t>(recons.size()));
    in.test = &prefix;
    in.recons = std::move(recons);
    for (auto& r : evaluate(in)) {
      if (r.name.rfind("video.", 0) == 0 || r.name.rfind("clip.", 0) == 0) reports.push_back(std::move(r));
    }
  }
  const std::string text = format_reports(reports);
  ensure_parent(c.report_file());
  write_file(c.report_file(), std::vector<std::uint8_t>(text.begin(), text.end()));
  log_info("evaluate: wrote " + c.report_file());
  return reports;
}

MOM_NS_END
