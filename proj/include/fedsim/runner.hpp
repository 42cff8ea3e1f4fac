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
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fedsim/config.hpp"
#include "fedsim/dataset.hpp"
#include "fedsim/evaluation.hpp"
#include "fedsim/federation.hpp"
#include "fedsim/partitioner.hpp"

namespace fedsim {

// Loads or generates the configured dataset.
Dataset build_dataset(const ExperimentConfig& config);

SplitResult build_split(const ExperimentConfig& config, const Dataset& dataset,
                        std::uint64_t seed);

// Size plan for uniform / class-imbalance clients. Without an explicit
// n_clients there is one client per training domain.
SizePlan build_size_plan(const ExperimentConfig& config, const Dataset& train,
                         std::uint64_t seed);

Partition build_partition(const ExperimentConfig& config, const Dataset& train,
                          DistributionKind kind, std::uint64_t seed);

struct LabeledReport {
  DistributionKind kind = DistributionKind::kUniform;
  SkewnessReport report;
  // Fingerprint of the train set the report was computed on.
  std::uint64_t train_signature = 0;
};

// FNV-1a over the sorted sample ids.
std::uint64_t train_signature(const Dataset& train);

// Long-format CSV `distribution,class,clients_with_class,q1,median,q3`.
// Throws ComparisonError for fewer than two reports or mismatched train sets.
std::string emit_figure1_data(const std::vector<LabeledReport>& reports);

struct TrainedCell {
  std::uint64_t seed = 0;
  double server_lr = 0.0;
  GlobalState global;
  std::vector<ClientState> clients;
  std::string round_log;  // CSV with header
};

// Runs every round of one (seed, server_lr) cell.
TrainedCell train_cell(const ExperimentConfig& config, const Dataset& train,
                       const Partition& partition, std::uint64_t seed,
                       double server_lr, std::size_t threads);

struct ResultRow {
  std::uint64_t seed = 0;
  double server_lr = 0.0;
  Strategy strategy = Strategy::kStandard;
  std::string split;
  EvalResult result;
};

// Evaluates a trained cell under every configured strategy and split.
// By Domain runs on the seen split only.
std::vector<ResultRow> evaluate_cell(const ExperimentConfig& config,
                                     const SplitResult& split,
                                     const TrainedCell& cell);

struct SummaryRow {
  Strategy strategy = Strategy::kStandard;
  std::string split;
  double server_lr = 0.0;
  std::size_t n_seeds = 0;
  double mean_miou = 0.0;
  double std_miou = 0.0;  // sample std, 0 for a single seed
  bool best = false;      // highest mean over server_lr for (strategy, split)
};

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);

std::string results_csv(const std::vector<ResultRow>& rows);
std::string summary_csv(const std::vector<SummaryRow>& rows);

struct RunOptions {
  std::optional<std::filesystem::path> output;
  std::optional<std::vector<std::uint64_t>> seeds;
  std::size_t threads = 1;
};

struct ExperimentOutcome {
  std::filesystem::path output;
  std::vector<ResultRow> rows;
  std::vector<SummaryRow> summary;
  std::vector<PartitionSummary> partitions;  // one per seed
};

// Applies command-line overrides and validates.
ExperimentConfig resolve_config(ExperimentConfig config, const RunOptions& options);

/*!
 * Full pipeline: dataset, split, partition, federation, evaluation.
 *
 * Output layout under the output directory:
 *   config.cfg, dataset.csv
 *   seed_<s>/partition.tsv, partition_summary.csv, skewness.csv, figure1.csv
 *   seed_<s>/lr_<lr>/round_log.csv, eval.csv, by_domain_clients.csv,
 *                    global_params.txt, global_bn.txt, clients/<id>.bn
 *   results.csv, summary.csv
 */
ExperimentOutcome run_experiment(const ExperimentConfig& config,
                                 const RunOptions& options = {});

// Individual pipeline stages behind the CLI verbs. Each recomputes the
// deterministic upstream stages it needs in memory.
std::filesystem::path stage_generate(const ExperimentConfig& config,
                                     const std::filesystem::path& out);
void stage_partition(const ExperimentConfig& config, const std::filesystem::path& out,
                     std::size_t threads);
void stage_train(const ExperimentConfig& config, const std::filesystem::path& out,
                 std::size_t threads);
void stage_evaluate(const ExperimentConfig& config, const std::filesystem::path& out,
                    std::size_t threads);
std::vector<SummaryRow> stage_report(const ExperimentConfig& config,
                                     const std::filesystem::path& out);

}  // namespace fedsim
