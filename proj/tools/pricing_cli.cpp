// Copyright 2026 The Pricing Simulator Authors.
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


#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "pricing/experiments.hpp"
#include "pricing/parallel.hpp"

namespace {

struct Options {
  std::string config;
  std::string out_dir = "out";
  int jobs = 0;
};

void add_common(CLI::App* cmd, Options& opts) {
  cmd->add_option("--config", opts.config, "experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out-dir", opts.out_dir, "output directory");
  cmd->add_option("--jobs", opts.jobs, "worker threads (0 = all cores)")
      ->check(CLI::NonNegativeNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Q-learning pricing simulator"};
  app.require_subcommand(1);
  Options opts;

  auto* simulate = app.add_subcommand("simulate", "run learning sessions");
  auto* analyze = app.add_subcommand("analyze", "extract cycles and aggregate patterns");
  auto* deviate = app.add_subcommand("deviate", "deviation tests on converged sessions");
  auto* theory = app.add_subcommand("theory", "grim-trigger predictions and cutoffs");
  auto* asym = app.add_subcommand("asym-report", "asymmetric-information comparison");
  for (auto* cmd : {simulate, analyze, deviate, theory, asym}) add_common(cmd, opts);

  CLI11_PARSE(app, argc, argv);

  try {
    const pricing::ExperimentConfig config = pricing::load_config(opts.config);
    const std::filesystem::path out(opts.out_dir);
    const int jobs = opts.jobs > 0 ? opts.jobs : pricing::default_parallelism();
    if (simulate->parsed()) {
      pricing::cmd_simulate(config, out, jobs);
    } else if (analyze->parsed()) {
      pricing::cmd_analyze(config, out, jobs);
    } else if (deviate->parsed()) {
      pricing::cmd_deviate(config, out, jobs);
    } else if (theory->parsed()) {
      pricing::cmd_theory(config, out);
    } else if (asym->parsed()) {
      pricing::cmd_asymmetric_report(config, out, jobs);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
