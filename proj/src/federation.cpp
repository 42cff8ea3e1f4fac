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
#include <cmath>
#include <numeric>
#include <set>

#include "fedsim/errors.hpp"
#include "fedsim/parallel.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/text_io.hpp"

namespace fedsim {

std::vector<ClientState> make_clients(const Partition& partition,
                                      const Dataset& train) {
  const auto resolved = partition.resolve(train);
  std::vector<ClientState> clients(resolved.size());
  for (std::size_t c = 0; c < resolved.size(); ++c) {
    clients[c].client_id = c;
    clients[c].samples = resolved[c];
    std::set<DomainKey> domains;
    for (auto i : resolved[c]) domains.insert(train[i].domain);
    clients[c].domains.assign(domains.begin(), domains.end());
  }
  return clients;
}

std::string to_string(ServerOptKind kind) {
  switch (kind) {
    case ServerOptKind::kSgd: return "sgd";
    case ServerOptKind::kFedAvgM: return "fedavgm";
    case ServerOptKind::kAdam: return "adam";
    case ServerOptKind::kAdaGrad: return "adagrad";
  }
  return "unknown";
}

ServerOptKind server_opt_from_string(const std::string& name) {
  if (name == "sgd") return ServerOptKind::kSgd;
  if (name == "fedavgm") return ServerOptKind::kFedAvgM;
  if (name == "adam") return ServerOptKind::kAdam;
  if (name == "adagrad") return ServerOptKind::kAdaGrad;
  throw ConfigError("unknown server optimizer '" + name +
                    "' (expected sgd, fedavgm, adam or adagrad)");
}

ServerOptState ServerOptState::make(ServerOptKind kind, double lr,
                                    std::size_t dim) {
  ServerOptState s;
  s.kind = kind;
  s.lr = lr;
  s.first = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  s.second = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  return s;
}

ServerStepResult server_step(const ServerOptState& opt,
                             const Eigen::VectorXd& params,
                             const Eigen::VectorXd& pseudo_grad) {
  if (params.size() != pseudo_grad.size()) {
    throw AggregationError("server_step: parameter vector has length " +
                           std::to_string(params.size()) +
                           " but pseudo-gradient has length " +
                           std::to_string(pseudo_grad.size()));
  }
  ServerStepResult out{params, opt};
  ServerOptState& s = out.opt;
  if (s.first.size() == 0) s.first = Eigen::VectorXd::Zero(params.size());
  if (s.second.size() == 0) s.second = Eigen::VectorXd::Zero(params.size());
  if (s.first.size() != params.size() || s.second.size() != params.size()) {
    throw AggregationError("server_step: optimizer accumulators have the wrong size");
  }
  s.step += 1;
  switch (s.kind) {
    case ServerOptKind::kSgd:
      out.params = params + s.lr * pseudo_grad;
      break;
    case ServerOptKind::kFedAvgM:
      s.first = s.momentum * s.first + pseudo_grad;
      out.params = params + s.lr * s.first;
      break;
    case ServerOptKind::kAdam: {
      const Eigen::VectorXd grad = -pseudo_grad;
      s.first = s.beta1 * s.first + (1.0 - s.beta1) * grad;
      s.second = s.beta2 * s.second + (1.0 - s.beta2) * grad.cwiseProduct(grad);
      const double t = static_cast<double>(s.step);
      const Eigen::ArrayXd m_hat = s.first.array() / (1.0 - std::pow(s.beta1, t));
      const Eigen::ArrayXd v_hat = s.second.array() / (1.0 - std::pow(s.beta2, t));
      out.params = (params.array() - s.lr * m_hat / (v_hat.sqrt() + s.eps)).matrix();
      break;
    }
    case ServerOptKind::kAdaGrad: {
      const Eigen::VectorXd grad = -pseudo_grad;
      s.second += grad.cwiseProduct(grad);
      out.params = (params.array() -
                    s.lr * grad.array() / (s.second.array().sqrt() + s.eps))
                       .matrix();
      break;
    }
  }
  return out;
}

namespace {

std::vector<const ClientUpdate*> by_client_id(const std::vector<ClientUpdate>& updates) {
  std::vector<const ClientUpdate*> order;
  for (const auto& u : updates) order.push_back(&u);
  std::sort(order.begin(), order.end(), [](auto* a, auto* b) {
    return a->client_id < b->client_id;
  });
  return order;
}

}  // namespace

std::vector<double> fedavg_weights(const std::vector<ClientUpdate>& updates) {
  if (updates.empty()) throw AggregationError("no client updates to aggregate");
  const auto order = by_client_id(updates);
  double total = 0.0;
  for (auto* u : order) {
    if (u->n_samples == 0) {
      throw AggregationError("client " + std::to_string(u->client_id) +
                             " reported zero samples");
    }
    total += static_cast<double>(u->n_samples);
  }
  std::vector<double> weights;
  for (auto* u : order) weights.push_back(static_cast<double>(u->n_samples) / total);
  return weights;
}

Eigen::VectorXd aggregate_fedavg(const std::vector<ClientUpdate>& updates) {
  const auto weights = fedavg_weights(updates);
  const auto order = by_client_id(updates);
  const auto dim = order.front()->delta.size();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (order[k]->delta.size() != dim) {
      throw AggregationError("client " + std::to_string(order[k]->client_id) +
                             " sent a delta of length " +
                             std::to_string(order[k]->delta.size()) +
                             ", expected " + std::to_string(dim));
    }
    sum += weights[k] * order[k]->delta;
  }
  return sum;
}

std::vector<std::size_t> sample_clients(const std::vector<std::size_t>& all_clients,
                                        std::size_t k, std::size_t round_index,
                                        std::uint64_t seed) {
  if (k < 1 || k > all_clients.size()) {
    throw ConfigError("sample_clients: k = " + std::to_string(k) +
                      " outside [1, " + std::to_string(all_clients.size()) + "]");
  }
  Rng rng(seed, Stream::kClientSampling, {round_index});
  std::vector<std::size_t> picked;
  for (auto pos : rng.sample_indices(all_clients.size(), k)) {
    picked.push_back(all_clients[pos]);
  }
  return picked;
}

SiloBnParts silobn_split(const ModelState& state) {
  return {state.params.flatten(), state.bn};
}

ModelState silobn_merge(const SiloBnParts& parts, int F, int Hd, int C) {
  return {model::ModelParams::unflatten(parts.shared, F, Hd, C), parts.local};
}

RoundResult run_round(const GlobalState& global,
                      const std::vector<ClientState>& clients,
                      const Dataset& train, const RoundConfig& config,
                      const ServerOptState& opt, std::size_t round_index) {
  std::vector<std::size_t> ids;
  for (const auto& c : clients) ids.push_back(c.client_id);
  const auto participants =
      sample_clients(ids, config.clients_per_round, round_index, config.seed);

  const auto& gparams = global.model.params;
  const int F = gparams.input_dim();
  const int Hd = gparams.hidden_dim();
  const int C = gparams.n_classes();
  const Eigen::VectorXd global_flat = gparams.flatten();
  const SampleTransform transform = transform_by_name(config.transform);

  auto find_slot = [&](std::size_t id) {
    for (std::size_t i = 0; i < clients.size(); ++i) {
      if (clients[i].client_id == id) return i;
    }
    throw ConfigError("unknown client id " + std::to_string(id));
  };

  std::vector<model::LocalTrainResult> results(participants.size());
  parallel_for(participants.size(), config.threads, [&](std::size_t k) {
    const ClientState& client = clients[find_slot(participants[k])];
    model::BNStats start_stats =
        config.silobn ? client.bn.value_or(model::BNStats::fresh(Hd, global.model.bn.momentum))
                      : global.model.bn;
    std::vector<SamplePtr> data;
    data.reserve(client.samples.size());
    for (auto i : client.samples) data.push_back(train.ptr(i));
    const auto local_seed =
        derive_seed(config.seed, Stream::kLocalTrain, {round_index, client.client_id});
    results[k] = model::local_train(gparams, start_stats, data, config.local,
                                    transform, local_seed);
  });

  RoundResult out{global, opt, clients, {}};
  std::vector<ClientUpdate> updates;
  double loss_sum = 0.0;
  for (std::size_t k = 0; k < participants.size(); ++k) {
    ClientState& client = out.clients[find_slot(participants[k])];
    updates.push_back({client.client_id, results[k].params.flatten() - global_flat,
                       client.samples.size()});
    client.bn = results[k].stats;
    ++client.participations;
    loss_sum += results[k].mean_epoch_loss;
  }

  const Eigen::VectorXd pseudo_grad = aggregate_fedavg(updates);
  auto stepped = server_step(opt, global_flat, pseudo_grad);
  out.global.model.params = model::ModelParams::unflatten(stepped.params, F, Hd, C);
  out.opt = std::move(stepped.opt);

  if (!config.silobn) {
    const auto weights = fedavg_weights(updates);
    std::vector<std::size_t> order(participants.begin(), participants.end());
    std::sort(order.begin(), order.end());
    model::BNStats merged = model::BNStats::fresh(Hd, global.model.bn.momentum);
    merged.running_mean.setZero();
    merged.running_var.setZero();
    merged.steps = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const auto& stats = *out.clients[find_slot(order[k])].bn;
      merged.running_mean += weights[k] * stats.running_mean;
      merged.running_var += weights[k] * stats.running_var;
      merged.steps = std::max(merged.steps, stats.steps);
    }
    out.global.model.bn = std::move(merged);
    ++out.global.bn_writes;
  }

  out.metrics.round = round_index;
  out.metrics.participants = participants;
  out.metrics.mean_local_loss = loss_sum / static_cast<double>(participants.size());
  return out;
}

std::string round_log_header() {
  return "round,participants,mean_local_loss,server_opt,server_lr,silobn\n";
}

std::string round_log_row(const RoundMetrics& metrics, const ServerOptState& opt,
                          bool silobn) {
  return std::to_string(metrics.round) + "," +
         text::join(metrics.participants, ";",
                    [](std::size_t id) { return std::to_string(id); }) +
         "," + text::format_double(metrics.mean_local_loss) + "," +
         to_string(opt.kind) + "," + text::format_double(opt.lr) + "," +
         (silobn ? "1" : "0") + "\n";
}

}  // namespace fedsim
