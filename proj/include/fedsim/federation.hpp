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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fedsim/dataset.hpp"
#include "fedsim/model.hpp"
#include "fedsim/partitioner.hpp"

namespace fedsim {

struct ModelState {
  model::ModelParams params;
  model::BNStats bn;

  bool operator==(const ModelState&) const = default;
};

// Server-side model plus a count of writes to its BN running statistics.
// Under SiloBN the count stays at zero for the whole run.
struct GlobalState {
  ModelState model;
  std::size_t bn_writes = 0;
};

struct ClientState {
  std::size_t client_id = 0;
  // Positions in the training Dataset.
  std::vector<std::size_t> samples;
  // Set after the first participation.
  std::optional<model::BNStats> bn;
  std::vector<DomainKey> domains;
  std::size_t participations = 0;
};

std::vector<ClientState> make_clients(const Partition& partition,
                                      const Dataset& train);

enum class ServerOptKind { kSgd, kFedAvgM, kAdam, kAdaGrad };

std::string to_string(ServerOptKind kind);
ServerOptKind server_opt_from_string(const std::string& name);

/*!
 * Server optimizer over pseudo-gradients.
 *
 * The pseudo-gradient Delta is the weighted mean of (client - global); every
 * rule treats -Delta as the gradient, so sgd at lr 1 is plain FedAvg.
 */
struct ServerOptState {
  ServerOptKind kind = ServerOptKind::kSgd;
  double lr = 1.0;
  double momentum = 0.9;  // fedavgm
  double beta1 = 0.9;     // adam
  double beta2 = 0.999;   // adam
  double eps = 1e-8;      // adam, adagrad
  Eigen::VectorXd first;   // fedavgm velocity / adam first moment
  Eigen::VectorXd second;  // adam second moment / adagrad accumulator
  std::uint64_t step = 0;

  static ServerOptState make(ServerOptKind kind, double lr, std::size_t dim);
};

struct ServerStepResult {
  Eigen::VectorXd params;
  ServerOptState opt;
};

ServerStepResult server_step(const ServerOptState& opt,
                             const Eigen::VectorXd& params,
                             const Eigen::VectorXd& pseudo_grad);

struct ClientUpdate {
  std::size_t client_id = 0;
  Eigen::VectorXd delta;
  std::size_t n_samples = 0;
};

// Per-update weights n_i / sum(n), ordered by ascending client id.
std::vector<double> fedavg_weights(const std::vector<ClientUpdate>& updates);

// Sample-weighted mean of the deltas, reduced in ascending client-id order no
// matter how the updates arrived.
Eigen::VectorXd aggregate_fedavg(const std::vector<ClientUpdate>& updates);

// k distinct ids from `all_clients`, uniform without replacement, drawn from
// the sub-stream of (seed, round_index).
std::vector<std::size_t> sample_clients(const std::vector<std::size_t>& all_clients,
                                        std::size_t k, std::size_t round_index,
                                        std::uint64_t seed);

struct SiloBnParts {
  Eigen::VectorXd shared;  // every learnable, BN gamma/beta included
  model::BNStats local;    // running mean/var and step count
};

SiloBnParts silobn_split(const ModelState& state);
ModelState silobn_merge(const SiloBnParts& parts, int F, int Hd, int C);

struct RoundConfig {
  std::size_t clients_per_round = 1;
  model::LocalTrainConfig local;
  bool silobn = true;
  std::string transform = "identity";
  std::size_t rounds = 1;
  std::uint64_t seed = 0;
  // Worker cap for concurrent local training.
  std::size_t threads = 1;
};

struct RoundMetrics {
  std::size_t round = 0;
  std::vector<std::size_t> participants;  // sampling order
  double mean_local_loss = 0.0;
};

struct RoundResult {
  GlobalState global;
  ServerOptState opt;
  std::vector<ClientState> clients;
  RoundMetrics metrics;
};

/*!
 * One federated round.
 *
 * Sampled clients train from the global learnables. Under SiloBN each client
 * starts from its own BN statistics (fresh ones on first participation) and
 * keeps the result; the server statistics are never touched. Otherwise
 * clients start from the server statistics, which are replaced by the
 * sample-weighted mean of the clients' statistics.
 */
RoundResult run_round(const GlobalState& global,
                      const std::vector<ClientState>& clients,
                      const Dataset& train, const RoundConfig& config,
                      const ServerOptState& opt, std::size_t round_index);

// `round,participants,mean_local_loss,server_opt,server_lr,silobn` with
// participants joined by ';'.
std::string round_log_header();
std::string round_log_row(const RoundMetrics& metrics, const ServerOptState& opt,
                          bool silobn);

}  // namespace fedsim
