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

#include "fedsim/dataset.hpp"
#include "fedsim/evaluation.hpp"
#include "fedsim/federation.hpp"
#include "fedsim/partitioner.hpp"

namespace fedsim {

/*!
 * Declarative experiment description.
 *
 * Text form: `[section]` headers followed by `key = value` lines; `#` starts a
 * comment; lists are comma-separated. Unknown sections or keys are rejected.
 * See README.md for the full key reference.
 */
struct ExperimentConfig {
  struct DatasetSection {
    enum class Source { kSynthetic, kManifest };
    Source source = Source::kSynthetic;
    SyntheticSpec synthetic;
    // Resolved against the config file's directory. A manifest dataset takes
    // its class count from synthetic.n_classes.
    std::string manifest;
    bool operator==(const DatasetSection&) const = default;
  } dataset;

  struct SplitSection {
    enum class Name { kCountry, kRainy, kBus, kCustom };
    Name partition = Name::kCountry;
    int seen_per_domain = 12;
    // Negative means "last index of the grid axis".
    int country_town = -1;
    int rainy_weather = -1;
    int bus_viewpoint = -1;
    // Custom predicate: clauses separated by ';', each a ','-joined
    // conjunction of axis=value terms (axis in weather, viewpoint, town).
    std::string custom;
    bool operator==(const SplitSection&) const = default;
  } split;

  struct DistributionSection {
    DistributionKind kind = DistributionKind::kHeterogeneous;
    bool explicit_plan = false;  // any size-plan key given
    std::size_t n_clients = 0;   // 0: one client per retained domain
    SizeMode size_mode;
    bool operator==(const DistributionSection&) const = default;
  } distribution;

  struct ModelSection {
    int hidden = 16;
    double bn_momentum = model::kDefaultBnMomentum;
    bool operator==(const ModelSection&) const = default;
  } model;

  struct FederationSection {
    std::size_t rounds = 60;
    std::size_t clients_per_round = 5;
    int local_epochs = 2;
    int batch_size = 64;
    double local_lr = 0.05;
    bool silobn = true;
    std::string transform = "identity";
    ServerOptKind optimizer = ServerOptKind::kSgd;
    std::vector<double> server_lrs{0.1, 1.0};
    double fedavgm_momentum = 0.9;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double adagrad_eps = 1e-8;
    bool operator==(const FederationSection&) const = default;
  } federation;

  struct EvaluationSection {
    std::vector<Strategy> strategies{Strategy::kStandard};
    std::vector<std::string> splits{"seen", "unseen"};
    // What By Domain does with clients that never participated: "calibrate"
    // runs a statistics-only local pass (lr 0) on their own data, "error"
    // fails the evaluation.
    std::string unvisited = "calibrate";
    bool operator==(const EvaluationSection&) const = default;
  } evaluation;

  std::vector<std::uint64_t> seeds{0};
  std::string output = "out";

  bool operator==(const ExperimentConfig&) const = default;

  // Throws ConfigError naming the first offending field.
  void validate() const;
  DomainPredicate unseen_predicate(const GridDims& grid) const;
};

// `base_dir` resolves a relative manifest path.
ExperimentConfig parse_config(const std::string& text,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
// Canonical text form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

std::string to_string(ExperimentConfig::SplitSection::Name name);

}  // namespace fedsim
