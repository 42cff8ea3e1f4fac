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
#include <span>
#include <string>
#include <vector>

#include "fedsim/dataset.hpp"
#include "fedsim/federation.hpp"
#include "fedsim/model.hpp"

namespace fedsim {

// Rows are ground truth, columns are predictions. Ignore pixels never enter.
class ConfusionMatrix {
 public:
  ConfusionMatrix() : ConfusionMatrix(0) {}
  explicit ConfusionMatrix(int n_classes)
      : n_classes_(n_classes),
        counts_(static_cast<std::size_t>(n_classes) * n_classes, 0) {}

  int n_classes() const { return n_classes_; }
  std::uint64_t at(int truth, int predicted) const {
    return counts_[index(truth, predicted)];
  }
  void add(int truth, int predicted, std::uint64_t n = 1) {
    counts_[index(truth, predicted)] += n;
  }
  std::uint64_t total() const;
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t index(int truth, int predicted) const {
    return static_cast<std::size_t>(truth) * n_classes_ + predicted;
  }
  int n_classes_;
  std::vector<std::uint64_t> counts_;
};

// Adds count[label][argmax(score row)] for every non-ignore pixel; argmax
// ties go to the lowest class index. Throws EvaluationError on shape mismatch.
ConfusionMatrix accumulate_confusion(ConfusionMatrix matrix,
                                     const model::RowMatrix& scores,
                                     std::span<const int> labels);

struct MiouResult {
  // Percent; NaN where TP + FP + FN == 0.
  std::vector<double> per_class_iou;
  double miou = 0.0;
};

// Throws EvaluationError for a matrix with no counted pixels.
MiouResult miou(const ConfusionMatrix& matrix);

enum class Strategy { kStandard, kByDomain };

std::string to_string(Strategy strategy);
Strategy strategy_from_string(const std::string& name);

struct EvalResult {
  std::vector<double> per_class_iou;
  double miou = 0.0;
  std::size_t n_images = 0;
  Strategy strategy = Strategy::kStandard;
  ConfusionMatrix confusion;
  // By Domain only: (client id, client-local mIoU) for every owning client.
  std::vector<std::pair<std::size_t, double>> per_client_miou;
};

// Eval-mode confusion of `samples` under fixed BN statistics.
ConfusionMatrix confusion_with_stats(const model::ModelParams& params,
                                     const model::BNStats& stats,
                                     std::span<const SamplePtr> samples,
                                     std::size_t batch_size = 4096);

// Exact mean and biased variance of the pre-BN activations over every pixel
// of `samples` (two passes), packaged as BN statistics.
model::BNStats test_set_statistics(const model::ModelParams& params,
                                   std::span<const SamplePtr> samples,
                                   std::size_t batch_size = 4096);

// Standard strategy: BN statistics computed from the whole test set.
EvalResult eval_standard(const model::ModelParams& params, const Dataset& test_set,
                         std::size_t batch_size = 4096);

/*!
 * By Domain strategy.
 *
 * Every test image is routed, by its full DomainKey, to the client owning that
 * domain and evaluated with the client's local BN statistics; one confusion
 * matrix is pooled across all images. Throws RoutingError when a domain has no
 * owner (or several), UninitializedStatsError when the owner never trained.
 */
EvalResult eval_by_domain(const model::ModelParams& learnables,
                          const std::vector<ClientState>& clients,
                          const Dataset& seen_test, std::size_t threads = 1);

// `strategy,split,seed,miou,per_class_ious` with IoUs joined by ';'.
std::string eval_csv_header();
std::string eval_csv_row(const EvalResult& result, const std::string& split,
                         std::uint64_t seed);

}  // namespace fedsim
