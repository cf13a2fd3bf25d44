// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "mom/pipeline.hpp"

// One function per CLI subcommand. Each reads and writes the files named by
// the run config; step logs go to `log`.

MOM_NS_BEGIN

Dataset cmd_gen(const RunConfig& config);
std::vector<StepLog> cmd_train_stage1(const RunConfig& config, std::ostream& log);
MemoryPool cmd_build_pool(const RunConfig& config);
std::vector<StepLog> cmd_train_stage2(const RunConfig& config, std::ostream& log);
/// Returns the written clip paths, one per input signal.
std::vector<std::string> cmd_reconstruct(const RunConfig& config);
std::vector<MetricReport> cmd_evaluate(const RunConfig& config);

/// The run config with the data section taken from the dataset file, so the
/// model is sized for the data it reads.
RunConfig with_dataset(const RunConfig& config, const Dataset& dataset);

/// Stage-2 model restored from its checkpoint.
MomModel load_model(const RunConfig& config);

std::string clip_file_name(std::size_t index);

MOM_NS_END
