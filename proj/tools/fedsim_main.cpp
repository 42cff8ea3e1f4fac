// Copyright 2026 The fedsim Authors. All Rights Reserved.
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
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fedsim/config.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/parallel.hpp"
#include "fedsim/runner.hpp"
#include "fedsim/text_io.hpp"

namespace {

constexpr int kConfigErrorExit = 2;
constexpr int kRuntimeErrorExit = 3;

std::vector<std::uint64_t> parse_seed_list(const std::string& value) {
  std::vector<std::uint64_t> seeds;
  for (auto token : fedsim::text::split(value, ',')) {
    auto v = fedsim::text::parse_int(token);
    if (!v || *v < 0) {
      throw fedsim::ConfigError("--seeds: bad seed '" + std::string(token) + "'");
    }
    seeds.push_back(static_cast<std::uint64_t>(*v));
  }
  return seeds;
}

struct CommonArgs {
  std::string config;
  std::string out;
  std::string seeds;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "Experiment config file")->required();
  cmd->add_option("--out", args.out, "Output directory (overrides experiment.output)");
  cmd->add_option("--seeds", args.seeds, "Comma-separated seeds (overrides experiment.seeds)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fedsim: federated segmentation simulator"};
  app.require_subcommand(1);
  CommonArgs args;
  std::vector<std::pair<std::string, CLI::App*>> verbs;
  for (const char* name : {"generate", "partition", "train", "evaluate", "report", "all"}) {
    auto* cmd = app.add_subcommand(name);
    add_common(cmd, args);
    verbs.emplace_back(name, cmd);
  }
  verbs[0].second->description("Build the dataset and export it as a manifest");
  verbs[1].second->description("Split and partition; write partitions and skewness reports");
  verbs[2].second->description("Run federated training for every seed x server lr");
  verbs[3].second->description("Evaluate trained checkpoints");
  verbs[4].second->description("Aggregate evaluation results across seeds");
  verbs[5].second->description("Run the whole pipeline");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigErrorExit;
  }

  try {
    fedsim::RunOptions options;
    if (!args.out.empty()) options.output = args.out;
    if (!args.seeds.empty()) options.seeds = parse_seed_list(args.seeds);
    options.threads = fedsim::default_thread_count();
    const auto config =
        fedsim::resolve_config(fedsim::load_config(args.config), options);
    const std::filesystem::path out = config.output;

    for (const auto& [name, cmd] : verbs) {
      if (!cmd->parsed()) continue;
      if (name == "generate") {
        std::cout << "manifest: " << fedsim::stage_generate(config, out).string() << "\n";
      } else if (name == "partition") {
        fedsim::stage_partition(config, out, options.threads);
      } else if (name == "train") {
        fedsim::stage_train(config, out, options.threads);
      } else if (name == "evaluate") {
        fedsim::stage_evaluate(config, out, options.threads);
      } else if (name == "report") {
        std::cout << fedsim::summary_csv(fedsim::stage_report(config, out));
      } else {
        const auto outcome = fedsim::run_experiment(config, options);
        std::cout << fedsim::summary_csv(outcome.summary);
      }
    }
  } catch (const fedsim::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfigErrorExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeErrorExit;
  }
  return EXIT_SUCCESS;
}
