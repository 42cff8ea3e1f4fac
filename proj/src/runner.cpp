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
#include "fedsim/runner.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "fedsim/errors.hpp"
#include "fedsim/parallel.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/text_io.hpp"

namespace fedsim {

namespace fs = std::filesystem;
using Source = ExperimentConfig::DatasetSection::Source;

Dataset build_dataset(const ExperimentConfig& config) {
  if (config.dataset.source == Source::kSynthetic) {
    return generate_synthetic(config.dataset.synthetic);
  }
  return load_manifest(config.dataset.manifest,
                       ManifestOptions{config.dataset.synthetic.n_classes, std::nullopt});
}

SplitResult build_split(const ExperimentConfig& config, const Dataset& dataset,
                        std::uint64_t seed) {
  return split_seen_unseen(dataset, config.unseen_predicate(dataset.grid()),
                           config.split.seen_per_domain, seed);
}

SizePlan build_size_plan(const ExperimentConfig& config, const Dataset& train,
                         std::uint64_t seed) {
  const std::size_t n_clients = config.distribution.n_clients > 0
                                    ? config.distribution.n_clients
                                    : train.domains().size();
  return make_size_plan(train.size(), n_clients, config.distribution.size_mode, seed);
}

Partition build_partition(const ExperimentConfig& config, const Dataset& train,
                          DistributionKind kind, std::uint64_t seed) {
  switch (kind) {
    case DistributionKind::kHeterogeneous:
      return partition_heterogeneous(train);
    case DistributionKind::kUniform:
      return partition_uniform(train, build_size_plan(config, train, seed), seed);
    case DistributionKind::kClassImbalance:
      return partition_class_imbalance(train, build_size_plan(config, train, seed), seed);
  }
  throw ConfigError("distribution.kind: unhandled distribution");
}

std::uint64_t train_signature(const Dataset& train) {
  std::vector<std::string> ids;
  ids.reserve(train.size());
  for (const auto& s : train.samples()) ids.push_back(s->id);
  std::sort(ids.begin(), ids.end());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& id : ids) {
    for (unsigned char ch : id) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xff;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string emit_figure1_data(const std::vector<LabeledReport>& reports) {
  if (reports.size() < 2) {
    throw ComparisonError("figure data needs at least two distributions to compare");
  }
  for (const auto& r : reports) {
    if (r.train_signature != reports.front().train_signature) {
      throw ComparisonError("skewness reports were computed on different train sets");
    }
  }
  std::string out = "distribution,class,clients_with_class,q1,median,q3\n";
  for (const auto& r : reports) {
    for (const auto& c : r.report.classes) {
      out += to_string(r.kind) + "," + std::to_string(c.class_index) + "," +
             std::to_string(c.clients_with_class) + "," + text::format_double(c.q1) +
             "," + text::format_double(c.median) + "," + text::format_double(c.q3) +
             "\n";
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cells

namespace {

ServerOptState make_server_opt(const ExperimentConfig& config, double lr,
                               std::size_t dim) {
  const auto& fed = config.federation;
  ServerOptState opt = ServerOptState::make(fed.optimizer, lr, dim);
  opt.momentum = fed.fedavgm_momentum;
  opt.beta1 = fed.adam_beta1;
  opt.beta2 = fed.adam_beta2;
  opt.eps = fed.optimizer == ServerOptKind::kAdaGrad ? fed.adagrad_eps : fed.adam_eps;
  return opt;
}

std::string lr_dir(double lr) { return "lr_" + text::format_double(lr); }
std::string seed_dir(std::uint64_t seed) { return "seed_" + std::to_string(seed); }

const Dataset& split_set(const SplitResult& split, const std::string& name) {
  return name == "seen" ? split.seen_test : split.unseen_test;
}

}  // namespace

TrainedCell train_cell(const ExperimentConfig& config, const Dataset& train,
                       const Partition& partition, std::uint64_t seed,
                       double server_lr, std::size_t threads) {
  const auto& fed = config.federation;
  auto [params, bn] = model::init_model(train.feature_dim(), config.model.hidden,
                                        train.n_classes(), seed, config.model.bn_momentum);
  TrainedCell cell;
  cell.seed = seed;
  cell.server_lr = server_lr;
  cell.global.model = {std::move(params), std::move(bn)};
  cell.clients = make_clients(partition, train);
  if (fed.clients_per_round > cell.clients.size()) {
    throw ConfigError("federation.clients_per_round: " +
                      std::to_string(fed.clients_per_round) + " exceeds the " +
                      std::to_string(cell.clients.size()) + " clients");
  }
  ServerOptState opt =
      make_server_opt(config, server_lr, cell.global.model.params.flat_size());
  RoundConfig rc;
  rc.clients_per_round = fed.clients_per_round;
  rc.local = {fed.local_epochs, fed.batch_size, fed.local_lr};
  rc.silobn = fed.silobn;
  rc.transform = fed.transform;
  rc.rounds = fed.rounds;
  rc.seed = seed;
  rc.threads = threads;

  cell.round_log = round_log_header();
  for (std::size_t r = 0; r < fed.rounds; ++r) {
    RoundResult res = run_round(cell.global, cell.clients, train, rc, opt, r);
    cell.global = std::move(res.global);
    cell.clients = std::move(res.clients);
    opt = std::move(res.opt);
    cell.round_log += round_log_row(res.metrics, opt, fed.silobn);
  }
  return cell;
}

std::vector<ResultRow> evaluate_cell(const ExperimentConfig& config,
                                     const SplitResult& split,
                                     const TrainedCell& cell) {
  std::vector<ResultRow> rows;
  const auto& params = cell.global.model.params;
  for (const auto& split_name : config.evaluation.splits) {
    const Dataset& test = split_set(split, split_name);
    for (Strategy strategy : config.evaluation.strategies) {
      if (strategy == Strategy::kByDomain && split_name != "seen") continue;
      ResultRow row{cell.seed, cell.server_lr, strategy, split_name, EvalResult{}};
      if (strategy == Strategy::kStandard) {
        row.result = eval_standard(params, test);
      } else {
        std::vector<ClientState> clients = cell.clients;
        if (config.evaluation.unvisited == "calibrate") {
          const auto transform = transform_by_name(config.federation.transform);
          for (auto& client : clients) {
            if (client.bn) continue;
            std::vector<SamplePtr> data;
            for (auto i : client.samples) data.push_back(split.train.ptr(i));
            const model::LocalTrainConfig stats_only{config.federation.local_epochs,
                                                     config.federation.batch_size, 0.0};
            const auto local_seed =
                derive_seed(cell.seed, Stream::kLocalTrain,
                            {config.federation.rounds, client.client_id});
            client.bn = model::local_train(params,
                                           model::BNStats::fresh(params.hidden_dim(),
                                                                 config.model.bn_momentum),
                                           data, stats_only, transform, local_seed)
                            .stats;
          }
        }
        row.result = eval_by_domain(params, clients, test);
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  // (strategy, split, lr) -> mIoUs in seed order of appearance.
  std::map<std::tuple<int, std::string, double>, std::vector<double>> cells;
  for (const auto& r : rows) {
    cells[{static_cast<int>(r.strategy), r.split, r.server_lr}].push_back(r.result.miou);
  }
  std::vector<SummaryRow> out;
  for (const auto& [key, values] : cells) {
    SummaryRow s;
    s.strategy = static_cast<Strategy>(std::get<0>(key));
    s.split = std::get<1>(key);
    s.server_lr = std::get<2>(key);
    s.n_seeds = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean_miou = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
      double sq = 0.0;
      for (double v : values) sq += (v - s.mean_miou) * (v - s.mean_miou);
      s.std_miou = std::sqrt(sq / static_cast<double>(values.size() - 1));
    }
    out.push_back(s);
  }
  // Best server lr per (strategy, split); ties keep the lowest rate.
  std::map<std::pair<int, std::string>, std::size_t> best;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto key = std::make_pair(static_cast<int>(out[i].strategy), out[i].split);
    auto it = best.find(key);
    if (it == best.end() || out[i].mean_miou > out[it->second].mean_miou) best[key] = i;
  }
  for (const auto& [key, i] : best) out[i].best = true;
  return out;
}

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::string out = "seed,server_lr,strategy,split,miou\n";
  for (const auto& r : rows) {
    out += std::to_string(r.seed) + "," + text::format_double(r.server_lr) + "," +
           to_string(r.strategy) + "," + r.split + "," +
           text::format_double(r.result.miou) + "\n";
  }
  return out;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out = "strategy,split,server_lr,n_seeds,mean_miou,std_miou,best\n";
  for (const auto& s : rows) {
    out += to_string(s.strategy) + "," + s.split + "," + text::format_double(s.server_lr) +
           "," + std::to_string(s.n_seeds) + "," + text::format_double(s.mean_miou) + "," +
           text::format_double(s.std_miou) + "," + (s.best ? "1" : "0") + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Orchestration

ExperimentConfig resolve_config(ExperimentConfig config, const RunOptions& options) {
  if (options.output) config.output = options.output->string();
  if (options.seeds) config.seeds = *options.seeds;
  config.validate();
  return config;
}

namespace {

struct SeedData {
  std::uint64_t seed = 0;
  SplitResult split;
  Partition partition;
};

SeedData prepare_seed(const ExperimentConfig& config, const Dataset& dataset,
                      std::uint64_t seed) {
  SeedData d;
  d.seed = seed;
  d.split = build_split(config, dataset, seed);
  if (d.split.train.empty()) throw SplitError("training set is empty");
  for (const auto& name : config.evaluation.splits) {
    if (split_set(d.split, name).empty()) {
      throw ConfigError("evaluation.splits: the " + name + " test set is empty");
    }
  }
  d.partition = build_partition(config, d.split.train, config.distribution.kind, seed);
  d.partition.validate_cover(d.split.train);
  return d;
}

void write_partition_artifacts(const ExperimentConfig& config, const SeedData& d,
                               const fs::path& dir, std::size_t threads) {
  const Dataset& train = d.split.train;
  text::write_file(dir / "partition.tsv", partition_to_text(d.partition));
  text::write_file(dir / "partition_summary.csv",
                   partition_summary_to_csv(partition_summary(d.partition)));
  text::write_file(dir / "split_summary.csv",
                   "split,images,domains\ntrain," + std::to_string(train.size()) + "," +
                       std::to_string(train.domains().size()) + "\nseen," +
                       std::to_string(d.split.seen_test.size()) + "," +
                       std::to_string(d.split.seen_test.domains().size()) + "\nunseen," +
                       std::to_string(d.split.unseen_test.size()) + "," +
                       std::to_string(d.split.unseen_test.domains().size()) + "\n");
  const int C = train.n_classes();
  text::write_file(dir / "skewness.csv",
                   skewness_to_csv(skewness_report(d.partition, train, C, threads)));

  const auto signature = train_signature(train);
  std::vector<LabeledReport> reports;
  for (auto kind : {DistributionKind::kUniform, DistributionKind::kHeterogeneous,
                    DistributionKind::kClassImbalance}) {
    const Partition p = kind == config.distribution.kind
                            ? d.partition
                            : build_partition(config, train, kind, d.seed);
    reports.push_back({kind, skewness_report(p, train, C, threads), signature});
  }
  text::write_file(dir / "figure1.csv", emit_figure1_data(reports));
}

void write_cell_checkpoint(const TrainedCell& cell, const fs::path& dir) {
  text::write_file(dir / "round_log.csv", cell.round_log);
  text::write_file(dir / "global_params.txt", model::params_to_text(cell.global.model.params));
  text::write_file(dir / "global_bn.txt", model::stats_to_text(cell.global.model.bn));
  std::string participation = "client,participations\n";
  for (const auto& c : cell.clients) {
    participation += std::to_string(c.client_id) + "," + std::to_string(c.participations) + "\n";
    if (c.bn) {
      text::write_file(dir / "clients" / (std::to_string(c.client_id) + ".bn"),
                       model::stats_to_text(*c.bn));
    }
  }
  text::write_file(dir / "participation.csv", participation);
}

TrainedCell read_cell_checkpoint(const Dataset& train, const Partition& partition,
                                 std::uint64_t seed, double lr, const fs::path& dir) {
  TrainedCell cell;
  cell.seed = seed;
  cell.server_lr = lr;
  cell.global.model.params = model::params_from_text(text::read_file(dir / "global_params.txt"));
  cell.global.model.bn = model::stats_from_text(text::read_file(dir / "global_bn.txt"));
  cell.clients = make_clients(partition, train);
  for (auto& c : cell.clients) {
    const auto path = dir / "clients" / (std::to_string(c.client_id) + ".bn");
    if (fs::exists(path)) {
      c.bn = model::stats_from_text(text::read_file(path));
      c.participations = 1;
    }
  }
  return cell;
}

void write_eval_artifacts(const std::vector<ResultRow>& rows, const fs::path& dir) {
  std::string eval = eval_csv_header();
  std::string per_client = "client,miou\n";
  for (const auto& r : rows) {
    eval += eval_csv_row(r.result, r.split, r.seed);
    for (const auto& [client, score] : r.result.per_client_miou) {
      per_client += std::to_string(client) + "," + text::format_double(score) + "\n";
    }
  }
  text::write_file(dir / "eval.csv", eval);
  text::write_file(dir / "by_domain_clients.csv", per_client);
}

std::vector<ResultRow> read_eval_artifacts(std::uint64_t seed, double lr,
                                           const fs::path& path) {
  std::vector<ResultRow> rows;
  bool header = true;
  const std::string contents = text::read_file(path);
  for (auto line : text::split(contents, '\n')) {
    if (text::trim(line).empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto fields = text::split(line, ',');
    if (fields.size() != 5) throw IngestionError("malformed row in " + path.string());
    ResultRow r;
    r.seed = seed;
    r.server_lr = lr;
    r.strategy = strategy_from_string(std::string(fields[0]));
    r.split = std::string(fields[1]);
    r.result.strategy = r.strategy;
    auto miou_value = text::parse_double(fields[3]);
    if (!miou_value) throw IngestionError("bad mIoU in " + path.string());
    r.result.miou = *miou_value;
    for (auto v : text::split(fields[4], ';')) {
      r.result.per_class_iou.push_back(text::parse_double(v).value_or(std::nan("")));
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

struct Cell {
  std::size_t seed_slot;
  double lr;
};

std::vector<Cell> cells_of(const ExperimentConfig& config) {
  std::vector<Cell> cells;
  for (std::size_t s = 0; s < config.seeds.size(); ++s) {
    for (double lr : config.federation.server_lrs) cells.push_back({s, lr});
  }
  return cells;
}

std::vector<SeedData> prepare_all(const ExperimentConfig& config, const Dataset& dataset,
                                  std::size_t threads) {
  std::vector<SeedData> seeds(config.seeds.size());
  parallel_for(seeds.size(), threads, [&](std::size_t i) {
    seeds[i] = prepare_seed(config, dataset, config.seeds[i]);
  });
  return seeds;
}

std::string dataset_csv(const Dataset& dataset) {
  return "images,domains,classes,feature_dim\n" + std::to_string(dataset.size()) + "," +
         std::to_string(dataset.domains().size()) + "," +
         std::to_string(dataset.n_classes()) + "," + std::to_string(dataset.feature_dim()) +
         "\n";
}

std::size_t inner_threads(std::size_t threads, std::size_t cells) {
  return cells >= threads ? 1 : std::max<std::size_t>(1, threads / cells);
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& raw, const RunOptions& options) {
  const ExperimentConfig config = resolve_config(raw, options);
  const fs::path out = config.output;
  const std::size_t threads = std::max<std::size_t>(1, options.threads);

  const Dataset dataset = build_dataset(config);
  const auto seeds = prepare_all(config, dataset, threads);
  text::write_file(out / "config.cfg", serialize_config(config));
  text::write_file(out / "dataset.csv", dataset_csv(dataset));

  ExperimentOutcome outcome;
  outcome.output = out;
  for (const auto& d : seeds) {
    write_partition_artifacts(config, d, out / seed_dir(d.seed), threads);
    outcome.partitions.push_back(partition_summary(d.partition));
  }

  const auto cells = cells_of(config);
  std::vector<std::vector<ResultRow>> cell_rows(cells.size());
  const std::size_t inner = inner_threads(threads, cells.size());
  parallel_for(cells.size(), threads, [&](std::size_t i) {
    const SeedData& d = seeds[cells[i].seed_slot];
    const TrainedCell cell =
        train_cell(config, d.split.train, d.partition, d.seed, cells[i].lr, inner);
    const fs::path dir = out / seed_dir(d.seed) / lr_dir(cells[i].lr);
    write_cell_checkpoint(cell, dir);
    cell_rows[i] = evaluate_cell(config, d.split, cell);
    write_eval_artifacts(cell_rows[i], dir);
  });
  for (auto& rows : cell_rows) {
    for (auto& r : rows) outcome.rows.push_back(std::move(r));
  }
  outcome.summary = summarize(outcome.rows);
  text::write_file(out / "results.csv", results_csv(outcome.rows));
  text::write_file(out / "summary.csv", summary_csv(outcome.summary));
  return outcome;
}

fs::path stage_generate(const ExperimentConfig& config, const fs::path& out) {
  const Dataset dataset = build_dataset(config);
  text::write_file(out / "dataset.csv", dataset_csv(dataset));
  return write_manifest(dataset, out / "data");
}

void stage_partition(const ExperimentConfig& config, const fs::path& out,
                     std::size_t threads) {
  const Dataset dataset = build_dataset(config);
  for (const auto& d : prepare_all(config, dataset, threads)) {
    write_partition_artifacts(config, d, out / seed_dir(d.seed), threads);
  }
}

void stage_train(const ExperimentConfig& config, const fs::path& out, std::size_t threads) {
  const Dataset dataset = build_dataset(config);
  const auto seeds = prepare_all(config, dataset, threads);
  const auto cells = cells_of(config);
  const std::size_t inner = inner_threads(threads, cells.size());
  parallel_for(cells.size(), threads, [&](std::size_t i) {
    const SeedData& d = seeds[cells[i].seed_slot];
    const TrainedCell cell =
        train_cell(config, d.split.train, d.partition, d.seed, cells[i].lr, inner);
    write_cell_checkpoint(cell, out / seed_dir(d.seed) / lr_dir(cells[i].lr));
  });
}

void stage_evaluate(const ExperimentConfig& config, const fs::path& out,
                    std::size_t threads) {
  const Dataset dataset = build_dataset(config);
  const auto seeds = prepare_all(config, dataset, threads);
  const auto cells = cells_of(config);
  parallel_for(cells.size(), threads, [&](std::size_t i) {
    const SeedData& d = seeds[cells[i].seed_slot];
    const fs::path dir = out / seed_dir(d.seed) / lr_dir(cells[i].lr);
    if (!fs::exists(dir / "global_params.txt")) {
      throw Error("no trained checkpoint in '" + dir.string() + "'; run 'train' first");
    }
    const TrainedCell cell =
        read_cell_checkpoint(d.split.train, d.partition, d.seed, cells[i].lr, dir);
    write_eval_artifacts(evaluate_cell(config, d.split, cell), dir);
  });
}

std::vector<SummaryRow> stage_report(const ExperimentConfig& config, const fs::path& out) {
  std::vector<ResultRow> rows;
  for (const auto& cell : cells_of(config)) {
    const auto seed = config.seeds[cell.seed_slot];
    const fs::path path = out / seed_dir(seed) / lr_dir(cell.lr) / "eval.csv";
    if (!fs::exists(path)) {
      throw Error("missing '" + path.string() + "'; run 'evaluate' first");
    }
    for (auto& r : read_eval_artifacts(seed, cell.lr, path)) rows.push_back(std::move(r));
  }
  auto summary = summarize(rows);
  text::write_file(out / "results.csv", results_csv(rows));
  text::write_file(out / "summary.csv", summary_csv(summary));
  return summary;
}

}  // namespace fedsim
