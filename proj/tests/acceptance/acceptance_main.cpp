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
// Acceptance suite: runs every acceptance criterion, prints one PASS/FAIL line
// per criterion and exits non-zero if any criterion fails. Tolerances are
// pinned below and must not be loosened to make a run pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "checks.hpp"
#include "fedsim/config.hpp"
#include "fedsim/evaluation.hpp"
#include "fedsim/federation.hpp"
#include "fedsim/parallel.hpp"
#include "fedsim/partitioner.hpp"
#include "fedsim/runner.hpp"
#include "fedsim/text_io.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace fedsim;

namespace {

// Pinned tolerances and limits.
constexpr double kTableIRuntimeSec = 5.0;
constexpr int kAlgIInstances = 50;
constexpr double kAlgIRuntimeSec = 1.0;
constexpr double kSkewClassFraction = 0.75;
constexpr double kSkewRuntimeSec = 10.0;
constexpr double kFedAvgRecoveryTol = 1e-12;
constexpr int kOptimizerSteps = 10;
constexpr double kOptimizerTol = 1e-12;
constexpr std::size_t kSiloBnRounds = 20;
constexpr std::size_t kSiloBnDivergeBy = 5;
constexpr int kGradPairs = 20;
constexpr double kGradRelTol = 1e-5;
constexpr double kByDomainUpliftPp = 1.0;
constexpr double kByDomainRuntimeSec = 600.0;
constexpr double kMiouExample = 33.33;
constexpr double kMiouExampleTol = 0.01;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  fs::path cli;
  fs::path config_path;
  fs::path work;
  ExperimentConfig reference;
  std::size_t threads = 1;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << std::fixed << v;
  return os.str();
}

int run_cli(const Context& ctx, const std::string& verb, const fs::path& config,
            const fs::path& out) {
  const std::string cmd = "\"" + ctx.cli.string() + "\" " + verb + " --config \"" +
                          config.string() + "\" --out \"" + out.string() + "\" > \"" +
                          (out.string() + ".log") + "\" 2>&1";
  fs::create_directories(out.parent_path());
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// (strategy, split) -> mean mIoU of the best server lr, from summary.csv.
std::map<std::string, double> best_means(const fs::path& summary) {
  std::map<std::string, double> out;
  const std::string text = text::read_file(summary);
  for (auto line : text::split(text, '\n')) {
    const auto f = text::split(line, ',');
    if (f.size() != 7 || f[6] != "1") continue;
    out[std::string(f[0]) + "/" + std::string(f[1])] = text::parse_double(f[4]).value_or(NAN);
  }
  return out;
}

// ---------------------------------------------------------------------------

Outcome criterion_table1(const Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  std::ostringstream detail;
  bool ok = true;
  const Dataset dataset = build_dataset(ctx.reference);

  auto country = ctx.reference;
  country.split.partition = ExperimentConfig::SplitSection::Name::kCountry;
  const auto split = build_split(country, dataset, 0);
  const auto het = partition_summary(partition_heterogeneous(split.train));
  ok &= het.n_clients == 90 && het.min_size == 48 && het.max_size == 48;
  detail << "country " << het.n_clients << "x" << het.min_size << "-" << het.max_size;

  for (auto [name, want] : {std::pair{ExperimentConfig::SplitSection::Name::kBus, 84u},
                            std::pair{ExperimentConfig::SplitSection::Name::kRainy, 70u}}) {
    auto c = ctx.reference;
    c.split.partition = name;
    const auto retained = build_split(c, dataset, 0).train.domains().size();
    ok &= retained == want;
    detail << ", " << to_string(name) << " " << retained << " domains";
  }

  // Cityscapes-like: 2975 label-skewed training images over 146 clients.
  SyntheticSpec city;
  city.grid = {1, 1, 7};
  city.images_per_domain = 425;
  city.height = city.width = 8;
  city.feature_dim = 2;
  city.n_classes = ctx.reference.dataset.synthetic.n_classes;
  city.block_size = 4;
  city.seed = 1;
  const Dataset city_train = generate_synthetic(city);
  const auto plan = make_size_plan(city_train.size(), 146, SizeMode::range(10, 45), 0);
  const auto ci = partition_class_imbalance(city_train, plan, 0);
  ci.validate_cover(city_train);
  const auto s = partition_summary(ci);
  ok &= s.n_clients == 146 && s.min_size >= 10 && s.max_size <= 45 &&
        ci.total_samples() == 2975;
  detail << ", cityscapes-like " << s.n_clients << " clients sizes [" << s.min_size << ","
         << s.max_size << "] sum " << ci.total_samples();

  const double t = seconds_since(t0);
  ok &= t < kTableIRuntimeSec;
  detail << " (" << fmt(t, 2) << "s < " << kTableIRuntimeSec << "s)";
  return {ok, detail.str()};
}

Outcome criterion_alg1(const Context&) {
  const auto t0 = std::chrono::steady_clock::now();
  auto make = [](const std::vector<std::set<int>>& sets, int C) {
    std::vector<SamplePtr> samples;
    for (std::size_t i = 0; i < sets.size(); ++i) {
      auto s = std::make_shared<Sample>();
      s->id = "i" + std::to_string(i + 1);
      s->height = 1;
      s->labels.assign(sets[i].begin(), sets[i].end());
      s->width = static_cast<int>(s->labels.size());
      samples.push_back(std::move(s));
    }
    return Dataset(std::move(samples), C, 0, GridDims{1, 1, 1});
  };
  auto ids_of = [](const Dataset& d) {
    std::vector<std::string> ids;
    for (const auto& s : d.samples()) ids.push_back(s->id);
    return ids;
  };

  // Worked example: i1{A}, i2{A,B}, i3{B,C}, i4{A,C}, plan [2,2].
  const std::vector<std::set<int>> worked{{0}, {0, 1}, {1, 2}, {0, 2}};
  const auto wd = make(worked, 3);
  const auto wp = partition_class_imbalance(wd, SizePlan{{2, 2}}, 0);
  bool ok = std::set<std::string>(wp.clients[0].begin(), wp.clients[0].end()) ==
                std::set<std::string>{"i2", "i3"} &&
            wp.clients[1] == std::vector<std::string>{"i4", "i1"} &&
            wp.clients == oracle::class_imbalance(ids_of(wd), worked, {2, 2}, 0);

  int matches = 0;
  for (int trial = 0; trial < kAlgIInstances; ++trial) {
    Rng gen(static_cast<std::uint64_t>(trial), Stream::kTest, {42});
    const std::size_t n = 1 + gen.below(6);
    const int C = 1 + static_cast<int>(gen.below(3));
    std::vector<std::set<int>> sets(n);
    for (auto& s : sets) {
      while (s.empty()) {
        for (int c = 0; c < C; ++c) {
          if (gen.uniform() < 0.5) s.insert(c);
        }
      }
    }
    const std::size_t k = 1 + gen.below(n);
    const auto plan = make_size_plan(n, k, SizeMode::range(1, n), trial);
    const auto d = make(sets, C);
    const auto got = partition_class_imbalance(d, plan, trial);
    if (got.clients == oracle::class_imbalance(ids_of(d), sets, plan.sizes, trial)) ++matches;
  }
  ok &= matches == kAlgIInstances;
  const double t = seconds_since(t0);
  ok &= t < kAlgIRuntimeSec;
  return {ok, std::to_string(matches) + "/" + std::to_string(kAlgIInstances) +
                  " random instances + worked example match the oracle (" + fmt(t, 3) +
                  "s < " + fmt(kAlgIRuntimeSec, 0) + "s)"};
}

Outcome criterion_skewness(const Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset dataset = build_dataset(ctx.reference);
  const auto split = build_split(ctx.reference, dataset, 0);
  const int C = dataset.n_classes();
  const auto plan = build_size_plan(ctx.reference, split.train, 0);
  const auto uni = skewness_report(partition_uniform(split.train, plan, 0), split.train, C,
                                   ctx.threads);
  const auto ci = skewness_report(partition_class_imbalance(split.train, plan, 0),
                                  split.train, C, ctx.threads);
  int wider = 0;
  for (int c = 0; c < C; ++c) wider += ci.classes[c].iqr > uni.classes[c].iqr;
  const double fraction = static_cast<double>(wider) / C;
  const double t = seconds_since(t0);
  const bool ok = fraction >= kSkewClassFraction && ci.mean_iqr() > uni.mean_iqr() &&
                  t < kSkewRuntimeSec;
  return {ok, std::to_string(wider) + "/" + std::to_string(C) +
                  " classes wider (need >= " + fmt(kSkewClassFraction * 100, 0) +
                  "%), mean IQR class_imbalance " + fmt(ci.mean_iqr(), 5) + " vs uniform " +
                  fmt(uni.mean_iqr(), 5) + " (" + fmt(t, 2) + "s < " +
                  fmt(kSkewRuntimeSec, 0) + "s)"};
}

struct Federation {
  Dataset train;
  std::vector<ClientState> clients;
  GlobalState global;
};

Federation reference_federation(const Context& ctx, std::uint64_t seed) {
  const Dataset dataset = build_dataset(ctx.reference);
  auto split = build_split(ctx.reference, dataset, seed);
  Federation f;
  f.train = split.train;
  f.clients = make_clients(partition_heterogeneous(f.train), f.train);
  const auto& s = ctx.reference.dataset.synthetic;
  auto [p, bn] = model::init_model(s.feature_dim, ctx.reference.model.hidden, s.n_classes,
                                   seed, ctx.reference.model.bn_momentum);
  f.global.model = {p, bn};
  return f;
}

RoundConfig reference_round(const Context& ctx, std::uint64_t seed) {
  const auto& fed = ctx.reference.federation;
  RoundConfig rc;
  rc.clients_per_round = fed.clients_per_round;
  rc.local = {fed.local_epochs, fed.batch_size, fed.local_lr};
  rc.silobn = fed.silobn;
  rc.transform = fed.transform;
  rc.rounds = fed.rounds;
  rc.seed = seed;
  rc.threads = ctx.threads;
  return rc;
}

Outcome criterion_fedavg_recovery(const Context& ctx) {
  const auto f = reference_federation(ctx, 0);
  auto rc = reference_round(ctx, 0);
  rc.clients_per_round = f.clients.size();
  const auto opt = ServerOptState::make(ServerOptKind::kSgd, 1.0,
                                        f.global.model.params.flat_size());
  const auto r = run_round(f.global, f.clients, f.train, rc, opt, 0);

  // Independent replay of every client's local training.
  std::vector<Eigen::VectorXd> locals(f.clients.size());
  const int Hd = f.global.model.params.hidden_dim();
  parallel_for(f.clients.size(), ctx.threads, [&](std::size_t i) {
    const auto& c = f.clients[i];
    std::vector<SamplePtr> data;
    for (auto k : c.samples) data.push_back(f.train.ptr(k));
    locals[i] = model::local_train(f.global.model.params,
                                   model::BNStats::fresh(Hd, f.global.model.bn.momentum), data,
                                   rc.local, identity_transform(),
                                   derive_seed(rc.seed, Stream::kLocalTrain, {0, c.client_id}))
                    .params.flatten();
  });
  double total = 0.0;
  for (const auto& c : f.clients) total += static_cast<double>(c.samples.size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(locals[0].size());
  for (std::size_t i = 0; i < f.clients.size(); ++i) {
    mean += (static_cast<double>(f.clients[i].samples.size()) / total) * locals[i];
  }
  const double err = (r.global.model.params.flatten() - mean).cwiseAbs().maxCoeff();
  return {err <= kFedAvgRecoveryTol,
          std::to_string(f.clients.size()) + " clients, max |global - weighted mean| = " +
              text::format_double(err) + " (tol " + text::format_double(kFedAvgRecoveryTol) +
              ")"};
}

Outcome criterion_optimizers(const Context&) {
  const Eigen::Index dim = 6;
  auto random_vec = [&](std::uint64_t seed) {
    Rng rng(seed, Stream::kTest, {11});
    Eigen::VectorXd v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = rng.normal();
    return v;
  };
  bool bitwise = true;
  auto sgd = ServerOptState::make(ServerOptKind::kSgd, 0.7, dim);
  auto m0 = ServerOptState::make(ServerOptKind::kFedAvgM, 0.7, dim);
  m0.momentum = 0.0;
  Eigen::VectorXd ws = random_vec(0), wm = ws;
  for (int step = 0; step < kOptimizerSteps; ++step) {
    const auto g = random_vec(100 + step);
    auto a = server_step(sgd, ws, g);
    auto b = server_step(m0, wm, g);
    ws = a.params;
    wm = b.params;
    sgd = a.opt;
    m0 = b.opt;
    bitwise &= (ws.array() == wm.array()).all();
  }

  // Three steps on fixed per-coordinate pseudo-gradients.
  const std::vector<double> seq{0.3, -0.2, 0.5};
  double worst_adam = 0.0, worst_adagrad = 0.0;
  auto adam = ServerOptState::make(ServerOptKind::kAdam, 0.1, dim);
  auto adagrad = ServerOptState::make(ServerOptKind::kAdaGrad, 0.1, dim);
  const Eigen::VectorXd w0 = random_vec(1);
  Eigen::VectorXd wa = w0, wg = w0;
  std::vector<std::vector<double>> want_adam(dim), want_adagrad(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    std::vector<double> deltas;
    for (double d : seq) deltas.push_back(d * static_cast<double>(i + 1));
    want_adam[i] = oracle::adam_trajectory(w0[i], deltas, 0.1, 0.9, 0.999, 1e-8);
    want_adagrad[i] = oracle::adagrad_trajectory(w0[i], deltas, 0.1, 1e-8);
  }
  for (std::size_t t = 0; t < seq.size(); ++t) {
    Eigen::VectorXd d(dim);
    for (Eigen::Index i = 0; i < dim; ++i) d[i] = seq[t] * static_cast<double>(i + 1);
    auto a = server_step(adam, wa, d);
    auto g = server_step(adagrad, wg, d);
    wa = a.params;
    wg = g.params;
    adam = a.opt;
    adagrad = g.opt;
    for (Eigen::Index i = 0; i < dim; ++i) {
      worst_adam = std::max(worst_adam, std::abs(wa[i] - want_adam[i][t]));
      worst_adagrad = std::max(worst_adagrad, std::abs(wg[i] - want_adagrad[i][t]));
    }
  }
  const bool ok = bitwise && worst_adam <= kOptimizerTol && worst_adagrad <= kOptimizerTol;
  return {ok, std::string("fedavgm(beta=0) == sgd bitwise over ") +
                  std::to_string(kOptimizerSteps) + " steps: " + (bitwise ? "yes" : "no") +
                  "; adam max err " + text::format_double(worst_adam) + ", adagrad max err " +
                  text::format_double(worst_adagrad) + " (tol " +
                  text::format_double(kOptimizerTol) + ")"};
}

Outcome criterion_silobn(const Context& ctx) {
  auto f = reference_federation(ctx, 0);
  auto rc = reference_round(ctx, 0);
  rc.silobn = true;
  const model::BNStats initial = f.global.model.bn;
  auto opt = ServerOptState::make(ServerOptKind::kSgd, 1.0, f.global.model.params.flat_size());
  GlobalState g = f.global;
  auto clients = f.clients;
  bool never_written = true;
  double divergence_at_5 = 0.0;
  for (std::size_t round = 0; round < kSiloBnRounds; ++round) {
    auto r = run_round(g, clients, f.train, rc, opt, round);
    g = r.global;
    clients = r.clients;
    opt = r.opt;
    never_written &= g.bn_writes == 0 && g.model.bn == initial;
    if (round + 1 == kSiloBnDivergeBy) {
      for (std::size_t a = 0; a < clients.size(); ++a) {
        for (std::size_t b = a + 1; b < clients.size(); ++b) {
          if (!clients[a].bn || !clients[b].bn) continue;
          const double d =
              (clients[a].bn->running_mean - clients[b].bn->running_mean).norm() +
              (clients[a].bn->running_var - clients[b].bn->running_var).norm();
          divergence_at_5 = std::max(divergence_at_5, d);
        }
      }
    }
  }
  const bool ok = never_written && divergence_at_5 > 0.0;
  return {ok, std::string("server BN untouched over ") + std::to_string(kSiloBnRounds) +
                  " rounds: " + (never_written ? "yes" : "no") +
                  "; max pairwise client BN distance after round " +
                  std::to_string(kSiloBnDivergeBy) + " = " + fmt(divergence_at_5)};
}

Outcome criterion_gradients(const Context&) {
  double worst = 0.0;
  for (int seed = 0; seed < kGradPairs; ++seed) {
    worst = std::max(worst, checks::max_gradient_rel_error(
                                checks::random_grad_case(static_cast<std::uint64_t>(seed))));
  }
  return {worst < kGradRelTol, std::to_string(kGradPairs) +
                                   " seeded pairs, max relative error " +
                                   text::format_double(worst) + " (tol " +
                                   text::format_double(kGradRelTol) + ", step " +
                                   text::format_double(checks::kFdStep) + ")"};
}

// Shared by criteria 8 and 11: two full reference runs through the CLI.
struct ReferenceRuns {
  int exit_a = -1, exit_b = -1;
  fs::path a, b;
  double seconds_a = 0.0;
};

ReferenceRuns& reference_runs(const Context& ctx) {
  static ReferenceRuns runs = [&] {
    ReferenceRuns r;
    r.a = ctx.work / "reference_a";
    r.b = ctx.work / "reference_b";
    fs::remove_all(r.a);
    fs::remove_all(r.b);
    const auto t0 = std::chrono::steady_clock::now();
    r.exit_a = run_cli(ctx, "all", ctx.config_path, r.a);
    r.seconds_a = seconds_since(t0);
    r.exit_b = run_cli(ctx, "all", ctx.config_path, r.b);
    return r;
  }();
  return runs;
}

Outcome criterion_by_domain(const Context& ctx) {
  const auto& runs = reference_runs(ctx);
  if (runs.exit_a != 0) return {false, "fedsim all exited with " + std::to_string(runs.exit_a)};
  const auto best = best_means(runs.a / "summary.csv");
  const double bd = best.count("by_domain/seen") ? best.at("by_domain/seen") : NAN;
  const double st = best.count("standard/seen") ? best.at("standard/seen") : NAN;
  const double uplift = bd - st;
  const bool ok = uplift >= kByDomainUpliftPp && runs.seconds_a < kByDomainRuntimeSec;
  return {ok, "seen mIoU (best lr, " + std::to_string(ctx.reference.seeds.size()) +
                  " seeds): by_domain " + fmt(bd, 2) + " vs standard " + fmt(st, 2) +
                  ", uplift " + fmt(uplift, 2) + "pp (need >= " + fmt(kByDomainUpliftPp, 1) +
                  "; " + fmt(runs.seconds_a, 1) + "s)"};
}

Outcome criterion_ci_vs_het(const Context& ctx) {
  std::map<DistributionKind, double> means;
  for (auto kind : {DistributionKind::kHeterogeneous, DistributionKind::kClassImbalance}) {
    auto c = ctx.reference;
    c.distribution.kind = kind;
    c.federation.silobn = false;
    c.evaluation.strategies = {Strategy::kStandard};
    const fs::path dir = ctx.work / ("fedavg_" + to_string(kind));
    fs::remove_all(dir);
    text::write_file(dir.string() + ".cfg", serialize_config(c));
    const int code = run_cli(ctx, "all", dir.string() + ".cfg", dir);
    if (code != 0) return {false, "fedsim all (" + to_string(kind) + ") exited with " +
                                      std::to_string(code)};
    const auto best = best_means(dir / "summary.csv");
    means[kind] = best.count("standard/seen") ? best.at("standard/seen") : NAN;
  }
  const double ci = means[DistributionKind::kClassImbalance];
  const double het = means[DistributionKind::kHeterogeneous];
  return {ci > het, "FedAvg seen mIoU (best lr, " + std::to_string(ctx.reference.seeds.size()) +
                        " seeds): class_imbalance " + fmt(ci, 2) + " vs heterogeneous " +
                        fmt(het, 2) + " (domain_shift " +
                        text::format_double(ctx.reference.dataset.synthetic.domain_shift) + ")"};
}

Outcome criterion_miou(const Context&) {
  ConfusionMatrix m(2);
  m.add(0, 0);
  m.add(0, 1);
  m.add(1, 1);
  m.add(1, 0);
  const double hand = miou(m).miou;
  ConfusionMatrix perfect(3);
  perfect.add(0, 0, 4);
  perfect.add(1, 1, 2);
  perfect.add(2, 2, 9);
  const double full = miou(perfect).miou;
  const bool ok = std::abs(hand - kMiouExample) <= kMiouExampleTol && full == 100.0;
  return {ok, "2x2 example " + fmt(hand, 4) + "% (want " + fmt(kMiouExample, 2) + " +- " +
                  fmt(kMiouExampleTol, 2) + "), perfect " + fmt(full, 1) + "%"};
}

Outcome criterion_determinism(const Context& ctx) {
  const auto& runs = reference_runs(ctx);
  if (runs.exit_a != 0 || runs.exit_b != 0) return {false, "a reference run failed"};
  std::set<fs::path> files_a, files_b;
  for (const auto& [root, set] : {std::pair{runs.a, &files_a}, std::pair{runs.b, &files_b}}) {
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (e.is_regular_file() && e.path().extension() == ".csv") {
        set->insert(fs::relative(e.path(), root));
      }
    }
  }
  if (files_a != files_b) return {false, "the two runs wrote different CSV file sets"};
  std::size_t bytes = 0;
  for (const auto& rel : files_a) {
    const auto x = text::read_file(runs.a / rel);
    if (x != text::read_file(runs.b / rel)) return {false, rel.string() + " differs"};
    bytes += x.size();
  }
  return {true, std::to_string(files_a.size()) + " CSV files (" + std::to_string(bytes) +
                    " bytes) byte-identical across two runs"};
}

}  // namespace

int main(int argc, char** argv) {
  Context ctx;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--cli") ctx.cli = argv[i + 1];
    else if (flag == "--config") ctx.config_path = argv[i + 1];
    else if (flag == "--work") ctx.work = argv[i + 1];
    else {
      std::cerr << "unknown flag " << flag << "\n";
      return 2;
    }
  }
  if (ctx.cli.empty() || ctx.config_path.empty() || ctx.work.empty()) {
    std::cerr << "usage: fedsim_acceptance --cli <fedsim> --config <reference.cfg> --work <dir>\n";
    return 2;
  }
  try {
    ctx.reference = load_config(ctx.config_path);
    ctx.reference.validate();
  } catch (const std::exception& e) {
    std::cerr << "cannot load reference config: " << e.what() << "\n";
    return 2;
  }
  ctx.threads = default_thread_count();
  fs::create_directories(ctx.work);

  const std::vector<std::pair<std::string, std::function<Outcome(const Context&)>>> criteria{
      {"Table I structural reproduction", criterion_table1},
      {"Algorithm I oracle equivalence", criterion_alg1},
      {"Skewness directionality", criterion_skewness},
      {"FedAvg recovery", criterion_fedavg_recovery},
      {"Server-optimizer oracles", criterion_optimizers},
      {"SiloBN locality", criterion_silobn},
      {"Gradient correctness", criterion_gradients},
      {"By Domain uplift direction", criterion_by_domain},
      {"Class imbalance vs heterogeneous ordering", criterion_ci_vs_het},
      {"mIoU oracle", criterion_miou},
      {"End-to-end determinism", criterion_determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << (i + 1) << ": "
              << criteria[i].first << " -- " << o.detail << " [" << fmt(seconds_since(t0), 2)
              << "s]" << std::endl;
  }
  std::cout << (failures == 0 ? "all acceptance criteria passed"
                              : std::to_string(failures) + " acceptance criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
