// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

// mom: synthetic brain-to-video reconstruction pipeline.
//
//   mom gen            --out run/
//   mom train-stage1   --out run/
//   mom build-pool     --out run/ [--merge other.momp]
//   mom train-stage2   --out run/
//   mom reconstruct    --out run/
//   mom evaluate       --out run/
//   mom gradcheck      [--inject-fault]
//
// Every subcommand takes --config FILE, --seed N, --out DIR and repeatable
// --set key=value overrides, applied in that order.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

#include "mom/commands.hpp"
#include "mom/gradcases.hpp"
#include "mom/persistence.hpp"

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> sets;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "key = value config file");
  cmd->add_option("--seed", c.seed, "run seed");
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--set", c.sets, "override, e.g. model.n_layers=2")->take_all();
  cmd->add_flag("--quiet", c.quiet, "only warnings and errors on stderr");
}

mom::RunConfig resolve(const Common& c) {
  mom::RunConfig cfg;
  if (!c.config_path.empty()) {
    const auto bytes = mom::read_file(c.config_path);
    mom::apply_config_text(cfg, std::string(bytes.begin(), bytes.end()));
  }
  if (c.seed) cfg.seed = *c.seed;
  if (!c.out.empty()) cfg.out_dir = c.out;
  for (const auto& s : c.sets) mom::apply_override(cfg, s);
  cfg.data.seed = cfg.seed;
  cfg.validate();
  std::string text = mom::format_settings(cfg);
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t end = text.find('\n', start);
    mom::log_info("config " + text.substr(start, end - start));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return cfg;
}

int gradcheck(std::uint64_t seed, bool inject_fault) {
  const auto rows = mom::grad_suite(seed, inject_fault);
  std::printf("%-20s %12s %10s  %s\n", "case", "rel_error", "tolerance", "result");
  bool all = true;
  for (const auto& r : rows) {
    std::printf("%-20s %12.3e %10.0e  %s\n", r.name.c_str(), r.result.max_rel_error, r.tolerance,
                r.pass ? "PASS" : "FAIL");
    if (!r.pass) {
      std::printf("  worst %s[%zu] analytic=%.6e numeric=%.6e\n", r.result.worst_param.c_str(), r.result.worst_index,
                  r.result.worst_analytic, r.result.worst_numeric);
    }
    all = all && r.pass;
  }
  return all ? 0 : static_cast<int>(mom::ErrorKind::Check);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic brain-to-video reconstruction"};
  app.require_subcommand(1);
  Common common;
  std::string merge;
  bool inject_fault = false;

  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  auto* s1 = app.add_subcommand("train-stage1", "train the brain model");
  auto* pool = app.add_subcommand("build-pool", "encode the training set into a memory pool");
  auto* s2 = app.add_subcommand("train-stage2", "train router, fusion and denoiser jointly");
  auto* rec = app.add_subcommand("reconstruct", "reconstruct clips from signals");
  auto* ev = app.add_subcommand("evaluate", "run the metric battery");
  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  for (auto* cmd : {gen, s1, pool, s2, rec, ev, gc}) add_common(cmd, common);
  pool->add_option("--merge", merge, "existing pool to merge the new entries into");
  gc->add_flag("--inject-fault", inject_fault, "corrupt one analytic gradient per case");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(mom::ErrorKind::Config);
  }

  try {
    if (common.quiet) mom::set_log_level(mom::LogLevel::Warn);
    mom::RunConfig cfg = resolve(common);
    if (!merge.empty()) cfg.merge_pool_path = merge;
    if (gen->parsed()) {
      mom::cmd_gen(cfg);
    } else if (s1->parsed()) {
      mom::cmd_train_stage1(cfg, std::cout);
    } else if (pool->parsed()) {
      mom::cmd_build_pool(cfg);
    } else if (s2->parsed()) {
      mom::cmd_train_stage2(cfg, std::cout);
    } else if (rec->parsed()) {
      mom::cmd_reconstruct(cfg);
    } else if (ev->parsed()) {
      std::cout << mom::format_reports(mom::cmd_evaluate(cfg));
    } else if (gc->parsed()) {
      return gradcheck(cfg.seed, inject_fault);
    }
  } catch (const mom::Error& e) {
    std::cerr << "error (" << mom::to_string(e.kind()) << "): " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
