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
#include "fedsim/federation.hpp"

#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "fedsim/errors.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace fedsim {
namespace {

using testing::tiny_spec;

Eigen::VectorXd random_vector(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed, Stream::kTest, {5});
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

TEST(SampleClients, ExhaustiveAndDeterministic) {
  const std::vector<std::size_t> all{3, 5, 8, 13, 21};
  const auto picked = sample_clients(all, 5, 0, 1);
  EXPECT_EQ(std::set<std::size_t>(picked.begin(), picked.end()),
            std::set<std::size_t>(all.begin(), all.end()));
  EXPECT_EQ(sample_clients(all, 3, 4, 9), sample_clients(all, 3, 4, 9));
  EXPECT_THROW(sample_clients(all, 0, 0, 0), ConfigError);
  EXPECT_THROW(sample_clients(all, 6, 0, 0), ConfigError);
}

TEST(SampleClients, RoundsUseIndependentSubStreams) {
  std::vector<std::size_t> all(20);
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  int differing = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto a = sample_clients(all, 4, 0, seed);
    const auto b = sample_clients(all, 4, 1, seed);
    if (a != b) ++differing;
    // Replaying the stream by hand gives the same draw.
    Rng rng(seed, Stream::kClientSampling, {1});
    EXPECT_EQ(b, rng.sample_indices(20, 4));
  }
  EXPECT_GE(differing, 1);
}

TEST(Aggregate, Examples) {
  const Eigen::VectorXd d = random_vector(4, 0);
  EXPECT_EQ(aggregate_fedavg({{7, d, 3}}), d);
  EXPECT_LT(aggregate_fedavg({{0, d, 2}, {1, -d, 2}}).cwiseAbs().maxCoeff(), 1e-15);
  Eigen::VectorXd a(2), b(2);
  a << 4, 0;
  b << 0, 4;
  const auto mean = aggregate_fedavg({{0, a, 1}, {1, b, 3}});
  EXPECT_DOUBLE_EQ(mean[0], 1.0);
  EXPECT_DOUBLE_EQ(mean[1], 3.0);
}

TEST(Aggregate, Errors) {
  EXPECT_THROW(aggregate_fedavg({}), AggregationError);
  EXPECT_THROW(aggregate_fedavg({{0, random_vector(3, 0), 1}, {1, random_vector(4, 0), 1}}),
               AggregationError);
  EXPECT_THROW(aggregate_fedavg({{0, random_vector(3, 0), 0}}), AggregationError);
}

TEST(AggregateProperty, OrderIndependentAndWeightsSumToOne) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed, Stream::kTest, {8});
    std::vector<ClientUpdate> updates;
    const auto n = 1 + rng.below(8);
    for (std::size_t i = 0; i < n; ++i) {
      updates.push_back({i * 7 + 1, random_vector(6, seed * 100 + i), 1 + rng.below(50)});
    }
    const auto reference = aggregate_fedavg(updates);
    const auto w = fedavg_weights(updates);
    double sum = 0.0;
    for (double x : w) sum += x;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    for (int shuffle = 0; shuffle < 5; ++shuffle) {
      rng.shuffle(updates);
      EXPECT_EQ(aggregate_fedavg(updates), reference);  // bitwise
    }
  }
}

TEST(ServerStep, SgdAtLrOneRecoversClientMean) {
  const Eigen::VectorXd w = random_vector(5, 1);
  const Eigen::VectorXd c1 = random_vector(5, 2), c2 = random_vector(5, 3);
  const auto delta = aggregate_fedavg({{0, c1 - w, 1}, {1, c2 - w, 3}});
  const auto r = server_step(ServerOptState::make(ServerOptKind::kSgd, 1.0, 5), w, delta);
  EXPECT_LT((r.params - (0.25 * c1 + 0.75 * c2)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(r.opt.step, 1u);
}

TEST(ServerStep, FedAvgMWithZeroMomentumIsSgd) {
  for (double lr : {0.1, 0.5, 1.0}) {
    auto sgd = ServerOptState::make(ServerOptKind::kSgd, lr, 7);
    auto m = ServerOptState::make(ServerOptKind::kFedAvgM, lr, 7);
    m.momentum = 0.0;
    Eigen::VectorXd ws = random_vector(7, 10), wm = ws;
    for (int step = 0; step < 10; ++step) {
      const auto g = random_vector(7, 20 + step);
      auto a = server_step(sgd, ws, g);
      auto b = server_step(m, wm, g);
      ws = a.params;
      wm = b.params;
      sgd = a.opt;
      m = b.opt;
      EXPECT_EQ(ws, wm);
    }
  }
}

TEST(ServerStep, FedAvgMMomentumRecurrence) {
  auto opt = ServerOptState::make(ServerOptKind::kFedAvgM, 0.5, 1);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(1), g = Eigen::VectorXd::Ones(1);
  double v = 0.0, expect = 0.0;
  for (int t = 0; t < 4; ++t) {
    auto r = server_step(opt, w, g);
    v = 0.9 * v + 1.0;
    expect += 0.5 * v;
    w = r.params;
    opt = r.opt;
    EXPECT_NEAR(w[0], expect, 1e-15);
  }
}

TEST(ServerStep, AdamAndAdaGradMatchHandRecurrences) {
  const std::vector<double> deltas{0.3, 0.3, 0.3};
  const auto want_adam = oracle::adam_trajectory(1.0, deltas, 0.1, 0.9, 0.999, 1e-8);
  const auto want_adagrad = oracle::adagrad_trajectory(1.0, deltas, 0.1, 1e-8);
  // Adam on a constant gradient moves by almost exactly lr per step.
  EXPECT_NEAR(want_adam[0], 1.1, 1e-6);
  EXPECT_NEAR(want_adagrad[1], 1.1 + 0.1 / std::sqrt(2.0), 1e-6);
  auto adam = ServerOptState::make(ServerOptKind::kAdam, 0.1, 1);
  auto adagrad = ServerOptState::make(ServerOptKind::kAdaGrad, 0.1, 1);
  Eigen::VectorXd wa = Eigen::VectorXd::Ones(1), wg = wa;
  for (std::size_t t = 0; t < deltas.size(); ++t) {
    const Eigen::VectorXd d = Eigen::VectorXd::Constant(1, deltas[t]);
    auto a = server_step(adam, wa, d);
    auto g = server_step(adagrad, wg, d);
    wa = a.params;
    wg = g.params;
    adam = a.opt;
    adagrad = g.opt;
    EXPECT_NEAR(wa[0], want_adam[t], 1e-12);
    EXPECT_NEAR(wg[0], want_adagrad[t], 1e-12);
    EXPECT_GE(adagrad.second.minCoeff(), 0.0);
  }
}

TEST(ServerStep, ShapeMismatch) {
  EXPECT_THROW(server_step(ServerOptState::make(ServerOptKind::kSgd, 1, 3),
                           random_vector(3, 0), random_vector(4, 0)),
               AggregationError);
  EXPECT_EQ(server_opt_from_string("adagrad"), ServerOptKind::kAdaGrad);
  EXPECT_THROW(server_opt_from_string("yogi"), ConfigError);
}

TEST(SiloBn, SplitMergeRoundTrip) {
  auto [p, s] = model::init_model(3, 4, 5, 0);
  s.running_mean.setConstant(0.25);
  s.steps = 9;
  const ModelState state{p, s};
  const auto parts = silobn_split(state);
  EXPECT_EQ(static_cast<std::size_t>(parts.shared.size()), 12u + 4 + 4 + 4 + 20 + 5);
  EXPECT_EQ(silobn_merge(parts, 3, 4, 5), state);
}

struct Fed {
  Dataset train;
  Partition partition;
  std::vector<ClientState> clients;
  GlobalState global;
};

Fed small_federation(std::uint64_t seed = 0) {
  auto spec = tiny_spec({2, 2, 2}, 4);
  Fed f;
  f.train = generate_synthetic(spec);
  f.partition = partition_heterogeneous(f.train);
  f.clients = make_clients(f.partition, f.train);
  auto [p, s] = model::init_model(spec.feature_dim, 5, spec.n_classes, seed);
  f.global.model = {p, s};
  return f;
}

RoundConfig small_round(bool silobn, std::size_t k = 3) {
  RoundConfig rc;
  rc.clients_per_round = k;
  rc.local = {1, 8, 0.1};
  rc.silobn = silobn;
  rc.seed = 4;
  rc.threads = 2;
  return rc;
}

TEST(MakeClients, MirrorsPartition) {
  const auto f = small_federation();
  ASSERT_EQ(f.clients.size(), 8u);
  for (std::size_t i = 0; i < f.clients.size(); ++i) {
    EXPECT_EQ(f.clients[i].client_id, i);
    EXPECT_FALSE(f.clients[i].bn.has_value());
    EXPECT_EQ(f.clients[i].domains.size(), 1u);
    EXPECT_EQ(f.clients[i].samples.size(), 4u);
  }
}

TEST(Round, SingleClientSgdLrOneAdoptsClientLearnables) {
  const auto f = small_federation();
  const auto rc = small_round(true, 1);
  const auto opt = ServerOptState::make(ServerOptKind::kSgd, 1.0, f.global.model.params.flat_size());
  const auto r = run_round(f.global, f.clients, f.train, rc, opt, 0);
  ASSERT_EQ(r.metrics.participants.size(), 1u);
  const auto id = r.metrics.participants[0];
  std::vector<SamplePtr> data;
  for (auto i : f.clients[id].samples) data.push_back(f.train.ptr(i));
  const auto local = model::local_train(
      f.global.model.params, model::BNStats::fresh(5), data, rc.local, identity_transform(),
      derive_seed(rc.seed, Stream::kLocalTrain, {0, id}));
  EXPECT_LT((r.global.model.params.flatten() - local.params.flatten()).cwiseAbs().maxCoeff(),
            1e-12);
  EXPECT_EQ(*r.clients[id].bn, local.stats);
}

TEST(Round, FullParticipationRecoversWeightedMean) {
  const auto f = small_federation();
  const auto rc = small_round(true, f.clients.size());
  const auto opt = ServerOptState::make(ServerOptKind::kSgd, 1.0, f.global.model.params.flat_size());
  const auto r = run_round(f.global, f.clients, f.train, rc, opt, 0);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(f.global.model.params.flat_size());
  double total = 0.0;
  for (const auto& c : f.clients) total += static_cast<double>(c.samples.size());
  for (const auto& c : f.clients) {
    std::vector<SamplePtr> data;
    for (auto i : c.samples) data.push_back(f.train.ptr(i));
    const auto local = model::local_train(
        f.global.model.params, model::BNStats::fresh(5), data, rc.local, identity_transform(),
        derive_seed(rc.seed, Stream::kLocalTrain, {0, c.client_id}));
    mean += (static_cast<double>(c.samples.size()) / total) * local.params.flatten();
  }
  EXPECT_LT((r.global.model.params.flatten() - mean).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Round, SiloBnKeepsServerStatsAndMovesAffine) {
  auto f = small_federation();
  const auto rc = small_round(true);
  auto opt = ServerOptState::make(ServerOptKind::kSgd, 1.0, f.global.model.params.flat_size());
  const auto initial = f.global;
  GlobalState g = f.global;
  auto clients = f.clients;
  for (std::size_t round = 0; round < 6; ++round) {
    auto r = run_round(g, clients, f.train, rc, opt, round);
    g = r.global;
    clients = r.clients;
    opt = r.opt;
  }
  EXPECT_EQ(g.model.bn, initial.model.bn);
  EXPECT_EQ(g.bn_writes, 0u);
  EXPECT_NE(g.model.params.gamma, initial.model.params.gamma);
  EXPECT_NE(g.model.params.beta, initial.model.params.beta);
  std::size_t with_stats = 0;
  for (const auto& c : clients) {
    EXPECT_EQ(c.bn.has_value(), c.participations > 0);
    with_stats += c.bn.has_value();
  }
  EXPECT_GE(with_stats, 2u);
}

TEST(Round, FirstParticipationStartsFromFreshStats) {
  auto f = small_federation();
  // Corrupt the server statistics; a SiloBN client must not see them.
  f.global.model.bn.running_mean.setConstant(50.0);
  const auto rc = small_round(true, 1);
  const auto opt = ServerOptState::make(ServerOptKind::kSgd, 1.0, f.global.model.params.flat_size());
  const auto r = run_round(f.global, f.clients, f.train, rc, opt, 0);
  const auto id = r.metrics.participants[0];
  EXPECT_LT(r.clients[id].bn->running_mean.cwiseAbs().maxCoeff(), 10.0);
}

TEST(Round, FedAvgModeAveragesStats) {
  const auto f = small_federation();
  const auto rc = small_round(false, 3);
  const auto opt = ServerOptState::make(ServerOptKind::kSgd, 1.0, f.global.model.params.flat_size());
  const auto r = run_round(f.global, f.clients, f.train, rc, opt, 0);
  EXPECT_EQ(r.global.bn_writes, 1u);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(5), var = Eigen::VectorXd::Zero(5);
  for (auto id : r.metrics.participants) {
    mean += r.clients[id].bn->running_mean / 3.0;  // equal client sizes
    var += r.clients[id].bn->running_var / 3.0;
  }
  EXPECT_LT((r.global.model.bn.running_mean - mean).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((r.global.model.bn.running_var - var).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Round, DeterministicReExecution) {
  const auto f = small_federation();
  auto run = [&](std::size_t threads) {
    auto rc = small_round(true);
    rc.threads = threads;
    auto opt = ServerOptState::make(ServerOptKind::kAdam, 0.1, f.global.model.params.flat_size());
    GlobalState g = f.global;
    auto clients = f.clients;
    std::string log;
    for (std::size_t round = 0; round < 4; ++round) {
      auto r = run_round(g, clients, f.train, rc, opt, round);
      g = r.global;
      clients = r.clients;
      opt = r.opt;
      log += round_log_row(r.metrics, opt, rc.silobn);
    }
    return std::make_pair(g, log);
  };
  const auto a = run(1), b = run(1), c = run(4);
  EXPECT_EQ(a.first.model, b.first.model);
  EXPECT_EQ(a.second, b.second);
  EXPECT_EQ(a.first.model, c.first.model);
  EXPECT_EQ(a.second, c.second);
}

TEST(RoundLog, Format) {
  RoundMetrics m{3, {4, 1}, 0.5};
  const auto opt = ServerOptState::make(ServerOptKind::kFedAvgM, 0.1, 1);
  EXPECT_EQ(round_log_header(), "round,participants,mean_local_loss,server_opt,server_lr,silobn\n");
  EXPECT_EQ(round_log_row(m, opt, true), "3,4;1,0.5,fedavgm,0.1,1\n");
}

}  // namespace
}  // namespace fedsim
