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
#include "fedsim/evaluation.hpp"

#include <cmath>
#include <map>
#include <numeric>

#include "fedsim/errors.hpp"
#include "fedsim/parallel.hpp"
#include "fedsim/text_io.hpp"

namespace fedsim {

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.n_classes_ != n_classes_) {
    throw EvaluationError("cannot merge confusion matrices of different sizes");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

ConfusionMatrix accumulate_confusion(ConfusionMatrix matrix,
                                     const model::RowMatrix& scores,
                                     std::span<const int> labels) {
  if (scores.rows() != static_cast<Eigen::Index>(labels.size())) {
    throw EvaluationError("prediction grid has " + std::to_string(scores.rows()) +
                          " pixels but label grid has " +
                          std::to_string(labels.size()));
  }
  if (scores.cols() != matrix.n_classes()) {
    throw EvaluationError("prediction scores have " + std::to_string(scores.cols()) +
                          " classes, matrix has " +
                          std::to_string(matrix.n_classes()));
  }
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const int truth = labels[static_cast<std::size_t>(i)];
    if (truth == kIgnoreLabel) continue;
    if (truth < 0 || truth >= matrix.n_classes()) {
      throw EvaluationError("label " + std::to_string(truth) + " out of range");
    }
    int best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c) {
      if (scores(i, c) > scores(i, best)) best = static_cast<int>(c);
    }
    matrix.add(truth, best);
  }
  return matrix;
}

MiouResult miou(const ConfusionMatrix& matrix) {
  if (matrix.total() == 0) {
    throw EvaluationError("mIoU of an empty confusion matrix is undefined");
  }
  const int C = matrix.n_classes();
  MiouResult out;
  out.per_class_iou.assign(C, std::nan(""));
  double sum = 0.0;
  int counted = 0;
  for (int c = 0; c < C; ++c) {
    std::uint64_t tp = matrix.at(c, c);
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    for (int k = 0; k < C; ++k) {
      if (k == c) continue;
      fp += matrix.at(k, c);
      fn += matrix.at(c, k);
    }
    const std::uint64_t denom = tp + fp + fn;
    if (denom == 0) continue;
    const double iou =
        100.0 * static_cast<double>(tp) / static_cast<double>(denom);
    out.per_class_iou[c] = iou;
    sum += iou;
    ++counted;
  }
  out.miou = sum / counted;
  return out;
}

std::string to_string(Strategy strategy) {
  return strategy == Strategy::kStandard ? "standard" : "by_domain";
}

Strategy strategy_from_string(const std::string& name) {
  if (name == "standard") return Strategy::kStandard;
  if (name == "by_domain") return Strategy::kByDomain;
  throw ConfigError("unknown inference strategy '" + name +
                    "' (expected standard or by_domain)");
}

namespace {

// Calls fn(batch) over `samples` in chunks of at most batch_size pixels;
// chunks never span images.
template <typename Fn>
void for_each_chunk(std::span<const SamplePtr> samples, std::size_t batch_size,
                    Fn&& fn) {
  std::vector<std::size_t> pixels;
  for (const auto& s : samples) {
    const std::size_t n = s->pixel_count();
    if (n <= batch_size) {
      fn(model::batch_from_sample(*s));
      continue;
    }
    for (std::size_t start = 0; start < n; start += batch_size) {
      const std::size_t end = std::min(n, start + batch_size);
      pixels.resize(end - start);
      std::iota(pixels.begin(), pixels.end(), start);
      fn(model::batch_from_sample(*s, pixels));
    }
  }
}

model::RowMatrix pre_bn(const model::ModelParams& params,
                        const model::PixelBatch& batch) {
  model::RowMatrix h = batch.features * params.w1;
  h.rowwise() += params.b1.transpose();
  return h;
}

EvalResult finish(const ConfusionMatrix& confusion, std::size_t n_images,
                  Strategy strategy) {
  EvalResult r;
  const auto m = miou(confusion);
  r.per_class_iou = m.per_class_iou;
  r.miou = m.miou;
  r.n_images = n_images;
  r.strategy = strategy;
  r.confusion = confusion;
  return r;
}

}  // namespace

ConfusionMatrix confusion_with_stats(const model::ModelParams& params,
                                     const model::BNStats& stats,
                                     std::span<const SamplePtr> samples,
                                     std::size_t batch_size) {
  ConfusionMatrix matrix(params.n_classes());
  for_each_chunk(samples, batch_size, [&](const model::PixelBatch& batch) {
    const auto fwd = model::forward(params, stats, batch, model::Mode::kEval);
    matrix = accumulate_confusion(std::move(matrix), fwd.logits, batch.labels);
  });
  return matrix;
}

model::BNStats test_set_statistics(const model::ModelParams& params,
                                   std::span<const SamplePtr> samples,
                                   std::size_t batch_size) {
  const int Hd = params.hidden_dim();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(Hd);
  std::size_t count = 0;
  for_each_chunk(samples, batch_size, [&](const model::PixelBatch& batch) {
    sum += pre_bn(params, batch).colwise().sum().transpose();
    count += batch.size();
  });
  if (count == 0) throw EvaluationError("test set has no pixels");
  const Eigen::VectorXd mean = sum / static_cast<double>(count);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(Hd);
  for_each_chunk(samples, batch_size, [&](const model::PixelBatch& batch) {
    const model::RowMatrix centered = pre_bn(params, batch).rowwise() - mean.transpose();
    sq += centered.array().square().colwise().sum().matrix().transpose();
  });
  model::BNStats stats = model::BNStats::fresh(Hd);
  stats.running_mean = mean;
  stats.running_var = sq / static_cast<double>(count);
  return stats;
}

EvalResult eval_standard(const model::ModelParams& params, const Dataset& test_set,
                         std::size_t batch_size) {
  if (test_set.empty()) throw EvaluationError("standard evaluation on an empty test set");
  const auto stats = test_set_statistics(params, test_set.samples(), batch_size);
  const auto confusion =
      confusion_with_stats(params, stats, test_set.samples(), batch_size);
  return finish(confusion, test_set.size(), Strategy::kStandard);
}

EvalResult eval_by_domain(const model::ModelParams& learnables,
                          const std::vector<ClientState>& clients,
                          const Dataset& seen_test, std::size_t threads) {
  if (seen_test.empty()) throw EvaluationError("by-domain evaluation on an empty test set");
  std::map<DomainKey, std::size_t> owner;
  std::map<DomainKey, std::size_t> owners_seen;
  for (std::size_t i = 0; i < clients.size(); ++i) {
    for (const auto& d : clients[i].domains) {
      owner[d] = i;
      ++owners_seen[d];
    }
  }
  // Group test images per owning client, preserving test order.
  std::map<std::size_t, std::vector<SamplePtr>> routed;
  for (const auto& s : seen_test.samples()) {
    auto it = owner.find(s->domain);
    if (it == owner.end()) {
      throw RoutingError("test image '" + s->id + "' has domain " +
                         to_string(s->domain) + " with no owning client");
    }
    if (owners_seen[s->domain] > 1) {
      throw RoutingError("domain " + to_string(s->domain) +
                         " is owned by more than one client");
    }
    routed[it->second].push_back(s);
  }
  std::vector<std::pair<std::size_t, std::vector<SamplePtr>>> groups(routed.begin(),
                                                                     routed.end());
  for (const auto& [slot, samples] : groups) {
    if (!clients[slot].bn) {
      throw UninitializedStatsError("client " + std::to_string(clients[slot].client_id) +
                                    " owns test images but never trained");
    }
  }
  std::vector<ConfusionMatrix> per_client(groups.size());
  parallel_for(groups.size(), threads, [&](std::size_t g) {
    const auto& [slot, samples] = groups[g];
    per_client[g] = confusion_with_stats(learnables, *clients[slot].bn, samples);
  });
  ConfusionMatrix pooled(learnables.n_classes());
  for (const auto& m : per_client) pooled += m;
  EvalResult result = finish(pooled, seen_test.size(), Strategy::kByDomain);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    result.per_client_miou.emplace_back(clients[groups[g].first].client_id,
                                        miou(per_client[g]).miou);
  }
  return result;
}

std::string eval_csv_header() { return "strategy,split,seed,miou,per_class_ious\n"; }

std::string eval_csv_row(const EvalResult& result, const std::string& split,
                         std::uint64_t seed) {
  return to_string(result.strategy) + "," + split + "," + std::to_string(seed) +
         "," + text::format_double(result.miou) + "," +
         text::join(result.per_class_iou, ";", text::format_double) + "\n";
}

}  // namespace fedsim
