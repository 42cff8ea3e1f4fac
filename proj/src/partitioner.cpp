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
#include "fedsim/partitioner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include "fedsim/errors.hpp"
#include "fedsim/parallel.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/text_io.hpp"

namespace fedsim {

std::string to_string(DistributionKind kind) {
  switch (kind) {
    case DistributionKind::kUniform: return "uniform";
    case DistributionKind::kHeterogeneous: return "heterogeneous";
    case DistributionKind::kClassImbalance: return "class_imbalance";
  }
  return "unknown";
}

DistributionKind distribution_from_string(const std::string& name) {
  if (name == "uniform") return DistributionKind::kUniform;
  if (name == "heterogeneous") return DistributionKind::kHeterogeneous;
  if (name == "class_imbalance") return DistributionKind::kClassImbalance;
  throw ConfigError("unknown distribution '" + name +
                    "' (expected uniform, heterogeneous or class_imbalance)");
}

std::size_t Partition::total_samples() const {
  std::size_t n = 0;
  for (const auto& c : clients) n += c.size();
  return n;
}

void Partition::validate_cover(const Dataset& train) const {
  std::vector<bool> seen(train.size(), false);
  for (std::size_t c = 0; c < clients.size(); ++c) {
    if (clients[c].empty()) {
      throw DataError("client " + std::to_string(c) + " is empty");
    }
    for (const auto& id : clients[c]) {
      const auto i = train.find(id);
      if (!i) throw DataError("partition references unknown sample '" + id + "'");
      if (seen[*i]) throw DataError("sample '" + id + "' assigned twice");
      seen[*i] = true;
    }
  }
  if (total_samples() != train.size()) {
    throw DataError("partition covers " + std::to_string(total_samples()) +
                    " of " + std::to_string(train.size()) + " samples");
  }
}

std::vector<std::vector<std::size_t>> Partition::resolve(
    const Dataset& train) const {
  std::vector<std::vector<std::size_t>> out(clients.size());
  for (std::size_t c = 0; c < clients.size(); ++c) {
    out[c].reserve(clients[c].size());
    for (const auto& id : clients[c]) out[c].push_back(train.index_of(id));
  }
  return out;
}

std::size_t SizePlan::total() const {
  return std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
}

// ---------------------------------------------------------------------------
// Size plans

SizePlan make_size_plan(std::size_t n_train, std::size_t n_clients,
                        const SizeMode& mode, std::uint64_t seed) {
  if (n_clients < 1) throw ConfigError("size plan: n_clients must be >= 1");
  SizePlan plan;
  if (mode.kind == SizeMode::Kind::kEqual) {
    if (n_train < n_clients) {
      throw ConfigError("size plan: " + std::to_string(n_train) +
                        " samples cannot fill " + std::to_string(n_clients) +
                        " non-empty clients");
    }
    const std::size_t base = n_train / n_clients;
    const std::size_t extra = n_train % n_clients;
    for (std::size_t i = 0; i < n_clients; ++i) {
      plan.sizes.push_back(base + (i < extra ? 1 : 0));
    }
    return plan;
  }

  if (mode.min < 1 || mode.min > mode.max) {
    throw ConfigError("size plan: range must satisfy 1 <= min <= max");
  }
  if (n_clients * mode.min > n_train || n_clients * mode.max < n_train) {
    throw ConfigError("size plan: " + std::to_string(n_train) +
                      " samples cannot be split into " +
                      std::to_string(n_clients) + " clients of size in [" +
                      std::to_string(mode.min) + ", " +
                      std::to_string(mode.max) + "]");
  }
  Rng rng(seed, Stream::kSizePlan);
  plan.sizes.resize(n_clients);
  for (auto& s : plan.sizes) s = rng.between(mode.min, mode.max);
  std::size_t total = plan.total();
  std::vector<std::size_t> movable;
  while (total != n_train) {
    const bool shrink = total > n_train;
    movable.clear();
    for (std::size_t i = 0; i < n_clients; ++i) {
      if (shrink ? plan.sizes[i] > mode.min : plan.sizes[i] < mode.max) {
        movable.push_back(i);
      }
    }
    auto& s = plan.sizes[movable[rng.below(movable.size())]];
    if (shrink) {
      --s;
      --total;
    } else {
      ++s;
      ++total;
    }
  }
  return plan;
}

namespace {

void check_plan(const Dataset& train, const SizePlan& plan) {
  if (plan.sizes.empty()) throw ConfigError("size plan has no clients");
  for (auto s : plan.sizes) {
    if (s == 0) throw ConfigError("size plan contains an empty client");
  }
  if (plan.total() != train.size()) {
    throw ConfigError("size plan sums to " + std::to_string(plan.total()) +
                      " but the training set has " +
                      std::to_string(train.size()) + " samples");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Distributions

Partition partition_uniform(const Dataset& train, const SizePlan& plan,
                            std::uint64_t seed) {
  check_plan(train, plan);
  Rng rng(seed, Stream::kUniformPartition);
  Partition out;
  out.kind = DistributionKind::kUniform;
  out.seed = seed;
  out.clients.resize(plan.sizes.size());

  std::map<DomainKey, std::vector<std::size_t>> by_domain;
  for (std::size_t i = 0; i < train.size(); ++i) {
    by_domain[train[i].domain].push_back(i);
  }
  const std::size_t n_clients = plan.sizes.size();
  const bool stratified =
      std::all_of(by_domain.begin(), by_domain.end(),
                  [&](const auto& kv) { return kv.second.size() == n_clients; }) &&
      std::all_of(plan.sizes.begin(), plan.sizes.end(),
                  [&](std::size_t s) { return s == by_domain.size(); });
  if (stratified) {
    for (auto& [key, members] : by_domain) {
      rng.shuffle(members);
      for (std::size_t c = 0; c < n_clients; ++c) {
        out.clients[c].push_back(train[members[c]].id);
      }
    }
    return out;
  }

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  std::size_t next = 0;
  for (std::size_t c = 0; c < n_clients; ++c) {
    for (std::size_t k = 0; k < plan.sizes[c]; ++k) {
      out.clients[c].push_back(train[order[next++]].id);
    }
  }
  return out;
}

Partition partition_heterogeneous(const Dataset& train) {
  std::map<DomainKey, std::vector<std::string>> by_domain;
  for (const auto& s : train.samples()) by_domain[s->domain].push_back(s->id);
  Partition out;
  out.kind = DistributionKind::kHeterogeneous;
  for (auto& [key, ids] : by_domain) out.clients.push_back(std::move(ids));
  return out;
}

Partition partition_class_imbalance(const Dataset& train, const SizePlan& plan,
                                    std::uint64_t seed, TieBreak tie_break) {
  check_plan(train, plan);
  (void)tie_break;  // kLowestClassIndex is the only policy.
  const int C = train.n_classes();
  const std::size_t n = train.size();

  std::vector<std::vector<int>> presence(n);
  std::vector<std::vector<std::size_t>> members(C);
  std::vector<std::size_t> pool_size(C, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto classes = class_presence(train[i]);
    if (classes.empty()) {
      throw DataError("sample '" + train[i].id +
                      "' has no labeled class; it cannot enter any class pool");
    }
    presence[i].assign(classes.begin(), classes.end());
    for (int c : classes) {
      members[c].push_back(i);
      ++pool_size[c];
    }
  }

  Rng rng(seed, Stream::kClassImbalance);
  std::vector<bool> allocated(n, false);
  std::size_t remaining = n;
  Partition out;
  out.kind = DistributionKind::kClassImbalance;
  out.seed = seed;
  out.clients.resize(plan.sizes.size());
  std::vector<std::size_t> pool;

  for (std::size_t client = 0; client < plan.sizes.size(); ++client) {
    auto& assigned = out.clients[client];
    while (assigned.size() < plan.sizes[client]) {
      int target = -1;
      for (int c = 0; c < C; ++c) {
        if (pool_size[c] == 0) continue;
        if (target < 0 || pool_size[c] < pool_size[target]) target = c;
      }
      // Pools shrink in lockstep with allocation, so an unallocated sample
      // always keeps every one of its pools non-empty.
      if (target < 0) {
        throw std::logic_error(
            "class imbalance: no non-empty class pool with samples left");
      }
      pool.clear();
      for (auto i : members[target]) {
        if (!allocated[i]) pool.push_back(i);
      }
      const std::size_t take =
          std::min(plan.sizes[client] - assigned.size(), pool.size());
      for (auto pos : rng.sample_indices(pool.size(), take)) {
        const std::size_t i = pool[pos];
        allocated[i] = true;
        for (int c : presence[i]) --pool_size[c];
        assigned.push_back(train[i].id);
      }
      const std::size_t before = remaining;
      remaining -= take;
      if (!(remaining < before)) {
        throw std::logic_error("class imbalance: allocation made no progress");
      }
    }
  }
  if (remaining != 0) {
    throw std::logic_error("class imbalance: samples left unallocated");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

double quantile_linear(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double SkewnessReport::mean_iqr() const {
  if (classes.empty()) return 0.0;
  double total = 0.0;
  for (const auto& c : classes) total += c.iqr;
  return total / static_cast<double>(classes.size());
}

SkewnessReport skewness_report(const Partition& partition, const Dataset& train,
                               int n_classes, std::size_t threads) {
  const auto resolved = partition.resolve(train);
  const std::size_t n_clients = resolved.size();
  std::vector<std::vector<std::uint64_t>> tallies(
      n_clients, std::vector<std::uint64_t>(n_classes, 0));
  parallel_for(n_clients, threads, [&](std::size_t client) {
    for (auto i : resolved[client]) {
      for (int label : train[i].labels) {
        if (label != kIgnoreLabel && label < n_classes) ++tallies[client][label];
      }
    }
  });

  SkewnessReport report;
  report.n_clients = n_clients;
  for (int c = 0; c < n_classes; ++c) {
    ClassSkew skew;
    skew.class_index = c;
    std::uint64_t total = 0;
    for (std::size_t k = 0; k < n_clients; ++k) total += tallies[k][c];
    if (total > 0) {
      for (std::size_t k = 0; k < n_clients; ++k) {
        if (tallies[k][c] == 0) continue;
        skew.shares.push_back(static_cast<double>(tallies[k][c]) /
                              static_cast<double>(total));
      }
      skew.clients_with_class = skew.shares.size();
      skew.q1 = quantile_linear(skew.shares, 0.25);
      skew.median = quantile_linear(skew.shares, 0.5);
      skew.q3 = quantile_linear(skew.shares, 0.75);
      skew.iqr = skew.q3 - skew.q1;
    }
    report.classes.push_back(std::move(skew));
  }
  return report;
}

PartitionSummary partition_summary(const Partition& partition) {
  PartitionSummary s;
  s.kind = partition.kind;
  s.n_clients = partition.clients.size();
  if (s.n_clients == 0) return s;
  s.min_size = std::numeric_limits<std::size_t>::max();
  for (const auto& c : partition.clients) {
    s.min_size = std::min(s.min_size, c.size());
    s.max_size = std::max(s.max_size, c.size());
  }
  s.mean_size = static_cast<double>(partition.total_samples()) /
                static_cast<double>(s.n_clients);
  return s;
}

std::string partition_to_text(const Partition& partition) {
  std::string out;
  for (std::size_t c = 0; c < partition.clients.size(); ++c) {
    for (const auto& id : partition.clients[c]) {
      out += std::to_string(c) + "\t" + id + "\n";
    }
  }
  return out;
}

Partition partition_from_text(const std::string& text, DistributionKind kind,
                              std::uint64_t seed) {
  Partition out;
  out.kind = kind;
  out.seed = seed;
  std::size_t line_no = 0;
  for (auto line : text::split(text, '\n')) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto fields = text::split(line, '\t');
    auto index = fields.size() == 2 ? text::parse_int(fields[0]) : std::nullopt;
    if (!index || *index < 0) {
      throw IngestionError("partition line " + std::to_string(line_no) +
                           ": expected client_index<TAB>sample_id");
    }
    const auto c = static_cast<std::size_t>(*index);
    if (c + 1 < out.clients.size() || c > out.clients.size()) {
      throw IngestionError("partition line " + std::to_string(line_no) +
                           ": clients must appear in order");
    }
    if (c == out.clients.size()) out.clients.emplace_back();
    out.clients[c].emplace_back(text::trim(fields[1]));
  }
  return out;
}

std::string skewness_to_csv(const SkewnessReport& report) {
  std::string out = "class,clients_with_class,q1,median,q3,iqr\n";
  for (const auto& c : report.classes) {
    out += std::to_string(c.class_index) + "," +
           std::to_string(c.clients_with_class) + "," +
           text::format_double(c.q1) + "," + text::format_double(c.median) +
           "," + text::format_double(c.q3) + "," + text::format_double(c.iqr) +
           "\n";
  }
  return out;
}

std::string partition_summary_to_csv(const PartitionSummary& summary) {
  return "distribution,clients,min_size,max_size,mean_size\n" +
         to_string(summary.kind) + "," + std::to_string(summary.n_clients) +
         "," + std::to_string(summary.min_size) + "," +
         std::to_string(summary.max_size) + "," +
         text::format_double(summary.mean_size) + "\n";
}

}  // namespace fedsim
