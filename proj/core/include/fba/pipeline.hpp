// Copyright 2026 The fba Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fba/config.hpp"
#include "fba/dataset.hpp"
#include "fba/network.hpp"
#include "fba/records.hpp"

namespace fba {

struct CommandContext {
  std::size_t workers = 1;  // 0: one per hardware thread
  bool resume = false;
  std::ostream* log = nullptr;  // progress messages; null for silence
};

/// Stream seeds, all derived from the master seed.
enum class SeedStream : std::uint64_t { backbone = 1, dataset = 2, array = 3, merged = 4, folds = 5, control = 6 };
std::uint64_t stream_seed(const RunConfig& config, SeedStream stream);

/// "train" or "test" split of the configured dataset.
Dataset load_split(const RunConfig& config, const std::string& split);
NetworkSpec backbone_spec(const RunConfig& config, std::size_t categories);

/// Provenance tokens of each artifact as the current config would produce it.
std::string weights_provenance(const RunConfig& config);
std::string imagesets_provenance(const RunConfig& config);

/// Output locations derived from the config.
struct ArtifactPaths {
  std::filesystem::path weights, train_log, patterns, array_manifest, array_pixels, merged_manifest, merged_pixels,
      results, control, topk;
};
ArtifactPaths artifact_paths(const RunConfig& config);

/// Trains the backbone; writes the weight file and a per-epoch CSV log.
void cmd_train(const RunConfig& config, const CommandContext& ctx);

/// Writes bidirectional feature patterns for every category and ReLU layer.
void cmd_extract_patterns(const RunConfig& config, const CommandContext& ctx);

/// Builds array and merged composites from the test split.
void cmd_make_imagesets(const RunConfig& config, const CommandContext& ctx);

/// One unit of the evaluation sweep. Cells are ordered by imageset, category,
/// then the baseline, then mode, rectification, layer set and beta.
struct SweepCell {
  ImagesetKind imageset = ImagesetKind::normal;
  int category = 0;
  std::optional<AttentionTag> attention;
};
std::vector<SweepCell> sweep_cells(const RunConfig& config, const std::vector<std::string>& categories);

/// Runs the sweep into results.csv, control.csv and topk.csv. With
/// ctx.resume, cells already complete in results.csv are skipped.
void cmd_evaluate(const RunConfig& config, const CommandContext& ctx);

/// Writes analysis tables for a results file into `out_dir`.
void cmd_analyze(const std::filesystem::path& results, const std::filesystem::path& out_dir, double alpha,
                 const CommandContext& ctx);

}  // namespace fba
