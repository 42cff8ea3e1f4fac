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

#include <Eigen/Dense>

#include "fedsim/dataset.hpp"

// Per-pixel classifier Linear -> BatchNorm -> ReLU -> Linear with explicit
// forward and backward passes. Every operation takes its state by value or
// const reference and returns new state; nothing is mutated in place.
namespace fedsim::model {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kBnEpsilon = 1e-5;
inline constexpr double kDefaultBnMomentum = 0.1;

/*!
 * Learnable parameters.
 *
 * Flattened order (aggregation relies on it): w1 row-major (F x Hd), b1,
 * gamma, beta, w2 row-major (Hd x C), b2.
 */
struct ModelParams {
  RowMatrix w1;
  Eigen::VectorXd b1;
  Eigen::VectorXd gamma;
  Eigen::VectorXd beta;
  RowMatrix w2;
  Eigen::VectorXd b2;

  int input_dim() const { return static_cast<int>(w1.rows()); }
  int hidden_dim() const { return static_cast<int>(w1.cols()); }
  int n_classes() const { return static_cast<int>(w2.cols()); }

  static ModelParams zeros(int F, int Hd, int C);
  static std::size_t flat_size(int F, int Hd, int C);
  std::size_t flat_size() const {
    return flat_size(input_dim(), hidden_dim(), n_classes());
  }
  Eigen::VectorXd flatten() const;
  static ModelParams unflatten(const Eigen::VectorXd& flat, int F, int Hd, int C);

  bool all_finite() const;
  bool operator==(const ModelParams& other) const;
};

struct BNStats {
  Eigen::VectorXd running_mean;
  Eigen::VectorXd running_var;
  double momentum = kDefaultBnMomentum;
  std::uint64_t steps = 0;

  // Mean 0, variance 1.
  static BNStats fresh(int Hd, double momentum = kDefaultBnMomentum);
  bool operator==(const BNStats& other) const;
};

struct PixelBatch {
  RowMatrix features;  // N x F
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

// Pixels of `sample` at the given positions (all pixels when empty).
PixelBatch batch_from_sample(const Sample& sample,
                             std::span<const std::size_t> pixels = {});

std::pair<ModelParams, BNStats> init_model(int F, int Hd, int C,
                                           std::uint64_t seed,
                                           double momentum = kDefaultBnMomentum);

enum class Mode { kTrain, kEval };

struct ForwardCache {
  RowMatrix input;      // N x F
  RowMatrix pre_bn;     // N x Hd
  Eigen::VectorXd mean;     // normalization mean used
  Eigen::VectorXd inv_std;  // 1 / sqrt(var + eps)
  RowMatrix normalized;  // N x Hd, before the affine
  RowMatrix affine;      // N x Hd, before the ReLU
  RowMatrix hidden;      // N x Hd, after the ReLU
};

struct ForwardResult {
  RowMatrix logits;  // N x C
  ForwardCache cache;
  BNStats stats;  // updated in train mode, a copy of the input in eval mode
};

// Train mode normalizes by the biased batch moments and folds them into the
// running statistics as new = (1 - m) * old + m * batch. Throws BatchError in
// train mode for N < 2.
ForwardResult forward(const ModelParams& params, const BNStats& stats,
                      const PixelBatch& batch, Mode mode);

struct LossAndGrad {
  double loss = 0.0;
  ModelParams grads;
  BNStats stats;
};

// Mean cross-entropy over non-ignore pixels with exact backpropagation
// through train-mode BN. Ignore pixels still count toward batch moments.
// Throws LossError when every pixel is ignored.
LossAndGrad loss_and_grad(const ModelParams& params, const BNStats& stats,
                          const PixelBatch& batch);

// Eval-mode loss only; used by tests and reporting.
double eval_loss(const ModelParams& params, const BNStats& stats,
                 const PixelBatch& batch);

struct LocalTrainConfig {
  int epochs = 1;
  // Pixels per batch. Batches never span images.
  int batch_size = 64;
  double lr = 0.05;
};

struct LocalTrainResult {
  ModelParams params;
  BNStats stats;
  // Mean over epochs of the mean batch loss in that epoch.
  double mean_epoch_loss = 0.0;
  std::size_t steps = 0;
};

/*!
 * Plain-SGD local training.
 *
 * Each epoch shuffles the image order; each image's pixels are shuffled and
 * cut into batches of batch_size (a trailing single pixel joins the previous
 * batch). The transform runs on each sample before batching. A batch whose
 * pixels are all ignore still updates BN statistics but takes no SGD step.
 */
LocalTrainResult local_train(const ModelParams& params, const BNStats& stats,
                             std::span<const SamplePtr> client_data,
                             const LocalTrainConfig& config,
                             const SampleTransform& transform,
                             std::uint64_t seed);

// Header line "F Hd C" followed by one decimal per line in flattened order.
std::string params_to_text(const ModelParams& params);
ModelParams params_from_text(const std::string& text);

// Header "Hd momentum steps", then running_mean and running_var lines.
std::string stats_to_text(const BNStats& stats);
BNStats stats_from_text(const std::string& text);

}  // namespace fedsim::model
