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
#include <iosfwd>
#include <string>
#include <vector>

#include "fedsim/dataset.hpp"

namespace fedsim {

enum class DistributionKind { kUniform, kHeterogeneous, kClassImbalance };

std::string to_string(DistributionKind kind);
// Accepts "uniform", "heterogeneous", "class_imbalance".
DistributionKind distribution_from_string(const std::string& name);

// Ordered client datasets, each an ordered list of sample ids. Every training
// id appears in exactly one client and no client is empty.
struct Partition {
  std::vector<std::vector<std::string>> clients;
  DistributionKind kind = DistributionKind::kUniform;
  std::uint64_t seed = 0;

  std::size_t total_samples() const;
  // Throws DataError unless the clients are a disjoint, non-empty cover of
  // `train`.
  void validate_cover(const Dataset& train) const;
  // Client sample ids resolved to positions in `train`.
  std::vector<std::vector<std::size_t>> resolve(const Dataset& train) const;

  friend bool operator==(const Partition&, const Partition&) = default;
};

struct SizePlan {
  std::vector<std::size_t> sizes;

  std::size_t total() const;
  friend bool operator==(const SizePlan&, const SizePlan&) = default;
};

struct SizeMode {
  enum class Kind { kEqual, kRange };
  Kind kind = Kind::kEqual;
  std::size_t min = 0;
  std::size_t max = 0;

  static SizeMode equal() { return {}; }
  static SizeMode range(std::size_t lo, std::size_t hi) {
    return {Kind::kRange, lo, hi};
  }
  friend bool operator==(const SizeMode&, const SizeMode&) = default;
};

/*!
 * Client size plan summing to n_train.
 *
 * Equal mode hands the remainder out one sample per client from the front,
 * so sizes differ by at most one. Range mode draws every size uniformly in
 * [min, max], then rebalances one unit at a time on randomly chosen clients
 * that still have room until the sum matches.
 */
SizePlan make_size_plan(std::size_t n_train, std::size_t n_clients,
                        const SizeMode& mode, std::uint64_t seed);

/*!
 * Seeded uniform permutation of `train` sliced by the plan.
 *
 * When every domain of `train` holds exactly plan.sizes.size() samples and
 * every planned size equals the domain count, the draw is stratified instead:
 * each domain's samples are shuffled and dealt one per client, so every client
 * holds one image of each domain.
 */
Partition partition_uniform(const Dataset& train, const SizePlan& plan,
                            std::uint64_t seed);

// One client per domain present in `train`, ascending DomainKey order.
Partition partition_heterogeneous(const Dataset& train);

enum class TieBreak { kLowestClassIndex };

/*!
 * Label-skew maximizing partition.
 *
 * Keeps, for every class c, the pool D_c of unallocated samples containing c.
 * Clients are filled in plan order. While client i is short of s_i samples,
 * X is the smallest non-empty pool (ties go to the lowest class index);
 * min(s_i - |C_i|, |X|) members of X are drawn without replacement into the
 * client and removed from every pool. X is recomputed after every draw.
 *
 * Draw convention: X is listed in ascending train order and
 * Rng::sample_indices picks positions; ids are appended in draw order.
 *
 * Throws ConfigError if the plan does not sum to |train| and DataError if a
 * sample has no labeled class.
 */
Partition partition_class_imbalance(const Dataset& train, const SizePlan& plan,
                                    std::uint64_t seed,
                                    TieBreak tie_break = TieBreak::kLowestClassIndex);

struct ClassSkew {
  int class_index = 0;
  std::size_t clients_with_class = 0;
  // Per contributing client, in client order: its pixels of the class over
  // all clients' pixels of the class.
  std::vector<double> shares;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
};

struct SkewnessReport {
  std::size_t n_clients = 0;
  std::vector<ClassSkew> classes;

  double mean_iqr() const;
};

// Quartile with linear interpolation between order statistics
// (position q * (n - 1) in the sorted list).
double quantile_linear(std::vector<double> values, double q);

SkewnessReport skewness_report(const Partition& partition, const Dataset& train,
                               int n_classes, std::size_t threads = 1);

struct PartitionSummary {
  std::size_t n_clients = 0;
  std::size_t min_size = 0;
  std::size_t max_size = 0;
  double mean_size = 0.0;
  DistributionKind kind = DistributionKind::kUniform;
};

PartitionSummary partition_summary(const Partition& partition);

// `client_index<TAB>sample_id` lines, clients in order.
std::string partition_to_text(const Partition& partition);
Partition partition_from_text(const std::string& text, DistributionKind kind,
                              std::uint64_t seed);

// CSV with header class,clients_with_class,q1,median,q3,iqr.
std::string skewness_to_csv(const SkewnessReport& report);
// CSV with header distribution,clients,min_size,max_size,mean_size.
std::string partition_summary_to_csv(const PartitionSummary& summary);

}  // namespace fedsim
