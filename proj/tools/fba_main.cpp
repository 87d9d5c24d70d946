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

// fba: command-line driver for the attention experiment pipeline.
//
//   fba train            --config run.json [--seed N] [--out DIR]
//   fba extract-patterns --config run.json
//   fba make-imagesets   --config run.json
//   fba evaluate         --config run.json [--workers N] [--resume]
//   fba analyze          [--config run.json] [--results FILE] [--out DIR]
//
// Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.

#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fba/config.hpp"
#include "fba/errors.hpp"
#include "fba/pipeline.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::size_t workers = 1;
  bool resume = false;
  std::string results;
};

void add_common(CLI::App* cmd, Flags& flags) {
  cmd->add_option("--config", flags.config, "JSON run configuration");
  cmd->add_option("--seed", flags.seed, "master seed (overrides the config)");
  cmd->add_option("--out", flags.out, "output directory (overrides paths.out)");
  cmd->add_option("--workers", flags.workers, "worker threads, 0 for one per core")->check(CLI::NonNegativeNumber);
}

fba::RunConfig make_config(const Flags& flags) {
  fba::RunConfig config = flags.config.empty() ? fba::RunConfig{} : fba::load_config(flags.config);
  if (flags.seed) config.seed = flags.seed;
  if (!flags.out.empty()) config.paths.out = flags.out;
  fba::finalize_config(config);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feature-based attention experiments on a small CNN"};
  app.require_subcommand(1);
  Flags flags;

  auto* train = app.add_subcommand("train", "train the backbone network");
  auto* extract = app.add_subcommand("extract-patterns", "compute per-category feature patterns");
  auto* make = app.add_subcommand("make-imagesets", "build array and merged test images");
  auto* evaluate = app.add_subcommand("evaluate", "run the detector sweep");
  auto* analyze = app.add_subcommand("analyze", "summarize a results file");
  for (auto* cmd : {train, extract, make, evaluate, analyze}) add_common(cmd, flags);
  evaluate->add_flag("--resume", flags.resume, "continue an interrupted sweep");
  analyze->add_option("--results", flags.results, "results CSV (default: from the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  fba::CommandContext ctx;
  ctx.workers = flags.workers;
  ctx.resume = flags.resume;
  ctx.log = &std::cout;
  try {
    if (analyze->parsed()) {
      std::filesystem::path results = flags.results;
      std::filesystem::path out_dir;
      double alpha = fba::AnalyzeConfig{}.alpha;
      if (!flags.config.empty() || flags.seed) {
        const auto config = make_config(flags);
        if (results.empty()) results = config.paths.results;
        out_dir = config.paths.out / "analysis";
        alpha = config.analyze.alpha;
      } else {
        if (results.empty()) throw fba::ConfigError("analyze needs --results or --config");
        out_dir = flags.out.empty() ? results.parent_path() / "analysis" : std::filesystem::path(flags.out);
      }
      fba::cmd_analyze(results, out_dir, alpha, ctx);
      return 0;
    }
    const auto config = make_config(flags);
    if (train->parsed()) fba::cmd_train(config, ctx);
    if (extract->parsed()) fba::cmd_extract_patterns(config, ctx);
    if (make->parsed()) fba::cmd_make_imagesets(config, ctx);
    if (evaluate->parsed()) fba::cmd_evaluate(config, ctx);
    return 0;
  } catch (const fba::ConfigError& e) {
    std::cerr << "fba: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "fba: " << e.what() << '\n';
    return 2;
  }
}
