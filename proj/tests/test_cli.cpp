// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mom/commands.hpp"
#include "mom/persistence.hpp"

using namespace mom;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("momrecon_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct CliRun {
  int code;
  std::string output;
};

CliRun mom_cli(const std::string& args) {
  const fs::path log = fs::temp_directory_path() / ("momrecon_cli_" + std::to_string(::getpid()) + ".log");
  const std::string cmd = std::string(MOM_CLI_PATH) + " " + args + " >" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

const char* kSmall =
    " --set data.n_train=32 --set data.n_test=16 --set train1.steps=15 --set train1.batch=8"
    " --set train2.steps=8 --set train2.batch=4 --set decoder.timesteps=8 --set eval.trials=40"
    " --set eval.subset=16 --set reconstruct.limit=2";

std::vector<std::uint8_t> bytes_of(const fs::path& p) { return read_file(p.string()); }

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(mom_cli("--help").code, 0);
  EXPECT_EQ(mom_cli("").code, 5);
  EXPECT_EQ(mom_cli("frobnicate").code, 5);
  EXPECT_EQ(mom_cli("gen --no-such-flag").code, 5);
}

TEST(Cli, ConfigErrorsExitFive) {
  const fs::path dir = scratch("cfg");
  const CliRun unknown = mom_cli("gen --out " + dir.string() + " --set model.depth=3");
  EXPECT_EQ(unknown.code, 5);
  EXPECT_NE(unknown.output.find("model.depth"), std::string::npos) << unknown.output;
  EXPECT_EQ(mom_cli("gen --out " + dir.string() + " --set data.n_train=0").code, 5);
  EXPECT_FALSE(fs::exists(dir / "dataset.momd"));
  std::ofstream(dir / "bad.cfg") << "train1.lr = fast\n";
  EXPECT_EQ(mom_cli("gen --out " + dir.string() + " --config " + (dir / "bad.cfg").string()).code, 5);
}

TEST(Cli, MissingInputsExitIo) {
  const fs::path dir = scratch("io");
  EXPECT_EQ(mom_cli("train-stage1 --out " + dir.string()).code, 12);
  EXPECT_EQ(mom_cli("gen --out " + dir.string() + " --config /nonexistent.cfg").code, 12);
}

TEST(Cli, GenIsByteIdenticalPerSeed) {
  const fs::path a = scratch("gen_a"), b = scratch("gen_b"), c = scratch("gen_c");
  ASSERT_EQ(mom_cli("gen --quiet --seed 7 --out " + a.string()).code, 0);
  ASSERT_EQ(mom_cli("gen --quiet --seed 7 --out " + b.string()).code, 0);
  ASSERT_EQ(mom_cli("gen --quiet --seed 8 --out " + c.string()).code, 0);
  EXPECT_EQ(bytes_of(a / "dataset.momd"), bytes_of(b / "dataset.momd"));
  EXPECT_NE(bytes_of(a / "dataset.momd"), bytes_of(c / "dataset.momd"));
  const Dataset d = load_dataset((a / "dataset.momd").string());
  EXPECT_EQ(d.config.seed, 7u);
  EXPECT_EQ(d.train.size(), 512u);
}

TEST(Cli, LogsResolvedConfig) {
  const fs::path dir = scratch("log");
  const CliRun r = mom_cli("gen --seed 3 --out " + dir.string() + " --set fusion.alpha=0.5");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("config seed = 3"), std::string::npos);
  EXPECT_NE(r.output.find("config fusion.alpha = 0.5"), std::string::npos);
  EXPECT_NE(r.output.find("config model.n_layers = 2"), std::string::npos);
}

TEST(Cli, GradcheckAndFaultInjection) {
  const CliRun ok = mom_cli("gradcheck");
  EXPECT_EQ(ok.code, 0) << ok.output;
  EXPECT_EQ(ok.output.find("FAIL"), std::string::npos);
  EXPECT_NE(ok.output.find("quadratic"), std::string::npos);
  const CliRun bad = mom_cli("gradcheck --inject-fault");
  EXPECT_EQ(bad.code, 8);
  EXPECT_NE(bad.output.find("FAIL"), std::string::npos);
}

TEST(Cli, CorruptPoolExitsFormat) {
  const fs::path dir = scratch("corrupt");
  const std::string common = " --quiet --out " + dir.string() + kSmall;
  ASSERT_EQ(mom_cli("gen" + common).code, 0);
  ASSERT_EQ(mom_cli("train-stage1" + common).code, 0);
  std::ofstream(dir / "junk.momp") << "MOMPxxxx";
  const CliRun r = mom_cli("build-pool" + common + " --merge " + (dir / "junk.momp").string());
  EXPECT_EQ(r.code, 4) << r.output;
}

TEST(Cli, PipelineMatchesInProcessCommands) {
  const fs::path dir = scratch("pipe");
  const std::string common = " --quiet --seed 2 --out " + dir.string() + kSmall;
  for (const char* sub : {"gen", "train-stage1", "build-pool", "train-stage2", "reconstruct", "evaluate"}) {
    const CliRun r = mom_cli(std::string(sub) + common);
    ASSERT_EQ(r.code, 0) << sub << "\n" << r.output;
  }
  EXPECT_TRUE(fs::exists(dir / "recon" / clip_file_name(1)));
  EXPECT_FALSE(fs::exists(dir / "recon" / clip_file_name(2)));

  // The same config in process writes identical artifacts.
  RunConfig c;
  c.seed = c.data.seed = 2;
  c.out_dir = scratch("pipe_inproc").string();
  std::istringstream sets(kSmall);
  std::string flag, kv;
  while (sets >> flag >> kv) apply_override(c, kv);
  std::ostringstream log;
  cmd_gen(c);
  cmd_train_stage1(c, log);
  cmd_build_pool(c);
  cmd_train_stage2(c, log);
  cmd_reconstruct(c);
  const auto reports = cmd_evaluate(c);
  EXPECT_EQ(bytes_of(dir / "stage2.momc"), bytes_of(c.stage2_file()));
  EXPECT_EQ(bytes_of(dir / "pool.momp"), bytes_of(c.pool_file()));
  const auto file = bytes_of(dir / "report.txt");
  const auto parsed = parse_reports(std::string(file.begin(), file.end()));
  ASSERT_EQ(parsed.size(), reports.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    EXPECT_EQ(parsed[i].name, reports[i].name);
    EXPECT_EQ(parsed[i].value, reports[i].value) << reports[i].name;
  }
}

TEST(Cli, MergeFlag) {
  const fs::path dir = scratch("merge");
  const std::string common = " --quiet --out " + dir.string() + kSmall;
  ASSERT_EQ(mom_cli("gen" + common).code, 0);
  ASSERT_EQ(mom_cli("train-stage1" + common).code, 0);
  ASSERT_EQ(mom_cli("build-pool" + common).code, 0);
  fs::copy_file(dir / "pool.momp", dir / "old.momp");
  ASSERT_EQ(mom_cli("build-pool" + common + " --merge " + (dir / "old.momp").string()).code, 0);
  const MemoryPool old = load_pool((dir / "old.momp").string()), merged = load_pool((dir / "pool.momp").string());
  EXPECT_EQ(encode_pool(merged), encode_pool(pool_merge(old, old)));
}

namespace {

struct ScratchCleanup : ::testing::Environment {
  void TearDown() override {
    std::error_code ec;
    fs::remove_all(fs::temp_directory_path() / ("momrecon_cli_" + std::to_string(::getpid())), ec);
    fs::remove(fs::temp_directory_path() / ("momrecon_cli_" + std::to_string(::getpid()) + ".log"), ec);
  }
};

const auto* const kCleanup = ::testing::AddGlobalTestEnvironment(new ScratchCleanup);

}  // namespace
