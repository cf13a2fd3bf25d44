// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <numeric>
#include <sstream>
#include <unistd.h>

#include "mom/commands.hpp"
#include "mom/persistence.hpp"

using namespace mom;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("momrecon_pipe_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

RunConfig small_run(const fs::path& dir) {
  RunConfig c;
  c.out_dir = dir.string();
  c.data.n_train = 48;
  c.data.n_test = 24;
  c.train1.steps = 20;
  c.train1.batch = 8;
  c.train2.steps = 10;
  c.train2.batch = 4;
  c.decoder_timesteps = 10;
  c.eval_trials = 50;
  c.eval_subset = 24;
  c.reconstruct_limit = 3;
  c.train1.log_every = 0;
  c.train2.log_every = 0;
  c.validate();
  return c;
}

bool bitwise(std::span<const real> a, std::span<const real> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(real)) == 0;
}

std::vector<std::uint8_t> bytes_of(const std::string& path) { return read_file(path); }

double window_mean(const std::vector<StepLog>& logs, std::size_t from, std::size_t to, double StepLog::*field) {
  double s = 0;
  for (std::size_t i = from; i < to; ++i) s += logs[i].*field;
  return s / double(to - from);
}

void run_all(const RunConfig& c) {
  std::ostringstream log;
  cmd_gen(c);
  cmd_train_stage1(c, log);
  cmd_build_pool(c);
  cmd_train_stage2(c, log);
  cmd_reconstruct(c);
  cmd_evaluate(c);
}

}  // namespace

TEST(Pipeline, ZeroStepCheckpointIsInitialization) {
  RunConfig c = small_run(scratch("zero"));
  c.train1.steps = 0;
  cmd_gen(c);
  std::ostringstream log;
  EXPECT_TRUE(cmd_train_stage1(c, log).empty());
  const MomModel fresh(c);
  MomModel loaded(c);
  for (auto& p : loaded.brain.params().items()) std::fill(p.mutable_value().span().begin(), p.mutable_value().span().end(), real(0));
  apply_checkpoint(load_checkpoint(c.stage1_file()), loaded.brain.params());
  for (std::size_t i = 0; i < fresh.brain.params().size(); ++i)
    EXPECT_TRUE(bitwise(fresh.brain.params().items()[i].value().span(), loaded.brain.params().items()[i].value().span()));
}

TEST(Pipeline, EveryStageIsByteDeterministic) {
  const RunConfig a = small_run(scratch("det_a")), b = small_run(scratch("det_b"));
  run_all(a);
  run_all(b);
  for (auto file : {&RunConfig::dataset_file, &RunConfig::stage1_file, &RunConfig::pool_file, &RunConfig::stage2_file,
                    &RunConfig::report_file})
    EXPECT_EQ(bytes_of((a.*file)()), bytes_of((b.*file)())) << (a.*file)();
  for (std::size_t i = 0; i < 3; ++i)
    EXPECT_EQ(bytes_of(a.recon_directory() + "/" + clip_file_name(i)),
              bytes_of(b.recon_directory() + "/" + clip_file_name(i)));
  EXPECT_FALSE(fs::exists(a.recon_directory() + "/" + clip_file_name(3)));

  RunConfig other = small_run(scratch("det_c"));
  other.seed = 1;
  other.data.seed = 1;
  cmd_gen(other);
  EXPECT_NE(bytes_of(a.dataset_file()), bytes_of(other.dataset_file()));
}

TEST(Pipeline, BuildPoolMatchesInMemory) {
  RunConfig c = small_run(scratch("pool"));
  const Dataset d = cmd_gen(c);
  std::ostringstream log;
  cmd_train_stage1(c, log);
  const MemoryPool pool = cmd_build_pool(c);
  EXPECT_EQ(pool.size(), c.data.n_train);
  MomModel m(c);
  apply_checkpoint(load_checkpoint(c.stage1_file()), m.brain.params());
  const MemoryPool direct = build_pool(m.brain, d.train, "train");
  EXPECT_EQ(encode_pool(load_pool(c.pool_file())), encode_pool(direct));
  Rng rng(3);
  const Tensor qc = Tensor::randn({c.data.d_clip}, rng), qa = Tensor::randn({c.data.d_act}, rng);
  const auto x = retrieve(mixture_scores(qc.span(), qa.span(), {}, pool), pool, 4);
  const auto y = retrieve(mixture_scores(qc.span(), qa.span(), {}, direct), direct, 4);
  EXPECT_EQ(x.top_ids, y.top_ids);

  // Merging an earlier pool keeps pool_merge semantics.
  const std::string first = (fs::path(c.out_dir) / "first.momp").string();
  fs::copy_file(c.pool_file(), first);
  c.merge_pool_path = first;
  const MemoryPool merged = cmd_build_pool(c);
  EXPECT_EQ(encode_pool(merged), encode_pool(pool_merge(direct, direct)));
  EXPECT_EQ(merged.size(), 2 * c.data.n_train);
}

TEST(Pipeline, FusionIdentityBeforeStage2) {
  const RunConfig c = small_run(scratch("ident"));
  const Dataset d = generate(c.data);
  const MomModel m(c);
  const MemoryPool pool = build_pool(m.brain, d.train, "train");
  for (const auto& s : d.test) {
    const BrainEncoding e = m.brain.encode(s.signal.span());
    const Conditioning cond = condition(m, e.embedding, pool);
    for (std::size_t r = 0; r < cond.cond.dim(0); ++r)
      EXPECT_TRUE(bitwise(cond.cond.row(r), cond.retrieval.text_mem.span()));
  }
}

TEST(Pipeline, ReconstructCountsAndSplit) {
  RunConfig c = small_run(scratch("recon"));
  run_all(c);
  c.reconstruct_limit = 0;
  c.reconstruct_split = "train";
  c.recon_dir = (fs::path(c.out_dir) / "train_recon").string();
  EXPECT_EQ(cmd_reconstruct(c).size(), c.data.n_train);
  c.reconstruct_split = "test";
  c.recon_dir = (fs::path(c.out_dir) / "test_recon").string();
  const auto paths = cmd_reconstruct(c);
  ASSERT_EQ(paths.size(), c.data.n_test);
  EXPECT_EQ(load_clip(paths[0]).shape(), c.data.clip_shape());
}

TEST(Pipeline, EvaluateReportMatchesDirectCalls) {
  const RunConfig c = small_run(scratch("eval"));
  run_all(c);
  const auto file = bytes_of(c.report_file());
  const auto reports = parse_reports(std::string(file.begin(), file.end()));

  const Dataset d = load_dataset(c.dataset_file());
  const MomModel m = load_model(c);
  EvalInputs in;
  in.brain = &m.brain;
  in.test = &d.test;
  in.trials = c.eval_trials;
  in.subset = c.eval_subset;
  in.embed_dim = c.eval_embed_dim;
  const auto direct = evaluate(in);
  for (const auto& r : direct) {
    const auto it = std::find_if(reports.begin(), reports.end(), [&](const MetricReport& x) { return x.name == r.name; });
    ASSERT_NE(it, reports.end()) << r.name;
    EXPECT_EQ(it->value, r.value) << r.name;
  }
  // Clip metrics cover the reconstructed prefix.
  Rng rng(0);
  const Tensor recon = load_clip(c.recon_directory() + "/" + clip_file_name(0));
  const auto ssim_row = std::find_if(reports.begin(), reports.end(), [](const MetricReport& x) { return x.name == "clip.ssim"; });
  ASSERT_NE(ssim_row, reports.end());
  EXPECT_EQ(ssim_row->n_trials, 3u);
  double s = 0;
  for (std::size_t i = 0; i < 3; ++i) s += clip_ssim(load_clip(c.recon_directory() + "/" + clip_file_name(i)), d.test[i].clip);
  EXPECT_NEAR(ssim_row->value, s / 3, 1e-12);
}

TEST(Pipeline, NonFiniteSignalAbortsWithStep) {
  RunConfig c = small_run(scratch("nan"));
  Dataset d = generate(c.data);
  for (auto& s : d.train) s.signal[0] = std::numeric_limits<real>::quiet_NaN();
  MomModel m(c);
  try {
    train_stage1(m.brain, d.train, c.stage1, c.train1, 0);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Numeric);
    EXPECT_NE(std::string(e.what()).find("step 0"), std::string::npos) << e.what();
  }
}

TEST(Pipeline, StepLogFormat) {
  StepLog s;
  s.step = 3;
  s.lr = 1e-3;
  s.total = 0.5;
  s.clip = -0.0;
  EXPECT_EQ(format_step(s), "step=3 lr=0.001 loss=0.5 clip=0 action=0 cls=0 diffusion=0 route=0");
}

TEST(Pipeline, KIsClampedToPoolSize) {
  MemoryPool pool(4, 2);
  Rng rng(5);
  pool.add({1, Tensor::randn({4}, rng), Tensor::randn({4}, rng), Tensor::randn({2}, rng), ""});
  EXPECT_EQ(effective_k(4, pool), 1u);
  EXPECT_EQ(effective_k(1, pool), 1u);
}

// Desk-scale training runs on the default dataset.
class DeskTraining : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    RunConfig c;
    c.out_dir = scratch("desk").string();
    c.train1.log_every = 0;
    c.train2.log_every = 0;
    cmd_gen(c);
    std::ostringstream log;
    stage1_ = cmd_train_stage1(c, log);
    cmd_build_pool(c);
    stage2_ = cmd_train_stage2(c, log);
  }
  static std::vector<StepLog> stage1_, stage2_;
};
std::vector<StepLog> DeskTraining::stage1_, DeskTraining::stage2_;

TEST_F(DeskTraining, Stage1LossHalves) {
  ASSERT_EQ(stage1_.size(), 2000u);
  EXPECT_LT(stage1_.back().total, 0.5 * stage1_.front().total);
}

TEST_F(DeskTraining, Stage2DiffusionDropsFivefold) {
  ASSERT_EQ(stage2_.size(), 2000u);
  // Single-step diffusion losses depend on the sampled timestep; compare window means.
  const double first = window_mean(stage2_, 0, 20, &StepLog::diffusion);
  const double last = window_mean(stage2_, 1900, 2000, &StepLog::diffusion);
  EXPECT_LT(5 * last, first) << first << " -> " << last;
}

namespace {

struct ScratchCleanup : ::testing::Environment {
  void TearDown() override {
    std::error_code ec;
    fs::remove_all(fs::temp_directory_path() / ("momrecon_pipe_" + std::to_string(::getpid())), ec);
    fs::remove(fs::temp_directory_path() / ("momrecon_pipe_" + std::to_string(::getpid()) + ".log"), ec);
  }
};

const auto* const kCleanup = ::testing::AddGlobalTestEnvironment(new ScratchCleanup);

}  // namespace
