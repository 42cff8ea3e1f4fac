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
#include "fedsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedsim/errors.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/text_io.hpp"

namespace fedsim::model {

// ---------------------------------------------------------------------------
// Parameter containers

ModelParams ModelParams::zeros(int F, int Hd, int C) {
  ModelParams p;
  p.w1 = RowMatrix::Zero(F, Hd);
  p.b1 = Eigen::VectorXd::Zero(Hd);
  p.gamma = Eigen::VectorXd::Zero(Hd);
  p.beta = Eigen::VectorXd::Zero(Hd);
  p.w2 = RowMatrix::Zero(Hd, C);
  p.b2 = Eigen::VectorXd::Zero(C);
  return p;
}

std::size_t ModelParams::flat_size(int F, int Hd, int C) {
  return static_cast<std::size_t>(F) * Hd + 3 * static_cast<std::size_t>(Hd) +
         static_cast<std::size_t>(Hd) * C + C;
}

namespace {

template <typename Block>
void append(Eigen::VectorXd& flat, Eigen::Index& pos, const Block& block) {
  // Row-major traversal regardless of storage order.
  for (Eigen::Index r = 0; r < block.rows(); ++r) {
    for (Eigen::Index c = 0; c < block.cols(); ++c) flat[pos++] = block(r, c);
  }
}

template <typename Block>
void extract(const Eigen::VectorXd& flat, Eigen::Index& pos, Block& block) {
  for (Eigen::Index r = 0; r < block.rows(); ++r) {
    for (Eigen::Index c = 0; c < block.cols(); ++c) block(r, c) = flat[pos++];
  }
}

}  // namespace

Eigen::VectorXd ModelParams::flatten() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(flat_size()));
  Eigen::Index pos = 0;
  append(flat, pos, w1);
  append(flat, pos, b1);
  append(flat, pos, gamma);
  append(flat, pos, beta);
  append(flat, pos, w2);
  append(flat, pos, b2);
  return flat;
}

ModelParams ModelParams::unflatten(const Eigen::VectorXd& flat, int F, int Hd,
                                   int C) {
  if (static_cast<std::size_t>(flat.size()) != flat_size(F, Hd, C)) {
    throw AggregationError("flat parameter vector has length " +
                           std::to_string(flat.size()) + ", expected " +
                           std::to_string(flat_size(F, Hd, C)));
  }
  ModelParams p = zeros(F, Hd, C);
  Eigen::Index pos = 0;
  extract(flat, pos, p.w1);
  extract(flat, pos, p.b1);
  extract(flat, pos, p.gamma);
  extract(flat, pos, p.beta);
  extract(flat, pos, p.w2);
  extract(flat, pos, p.b2);
  return p;
}

bool ModelParams::all_finite() const {
  return w1.allFinite() && b1.allFinite() && gamma.allFinite() &&
         beta.allFinite() && w2.allFinite() && b2.allFinite();
}

bool ModelParams::operator==(const ModelParams& o) const {
  return w1.rows() == o.w1.rows() && w1.cols() == o.w1.cols() &&
         w2.cols() == o.w2.cols() && w1 == o.w1 && b1 == o.b1 &&
         gamma == o.gamma && beta == o.beta && w2 == o.w2 && b2 == o.b2;
}

BNStats BNStats::fresh(int Hd, double momentum) {
  BNStats s;
  s.running_mean = Eigen::VectorXd::Zero(Hd);
  s.running_var = Eigen::VectorXd::Ones(Hd);
  s.momentum = momentum;
  return s;
}

bool BNStats::operator==(const BNStats& o) const {
  return running_mean.size() == o.running_mean.size() &&
         running_mean == o.running_mean && running_var == o.running_var &&
         momentum == o.momentum && steps == o.steps;
}

PixelBatch batch_from_sample(const Sample& sample,
                             std::span<const std::size_t> pixels) {
  if (!sample.has_features()) {
    throw BatchError("sample '" + sample.id + "' has no features");
  }
  const std::size_t n = pixels.empty() ? sample.pixel_count() : pixels.size();
  PixelBatch batch;
  batch.features.resize(static_cast<Eigen::Index>(n), sample.feature_dim);
  batch.labels.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t p = pixels.empty() ? k : pixels[k];
    const auto row = sample.pixel_features(p);
    for (int f = 0; f < sample.feature_dim; ++f) {
      batch.features(static_cast<Eigen::Index>(k), f) = row[f];
    }
    batch.labels[k] = sample.labels[p];
  }
  return batch;
}

std::pair<ModelParams, BNStats> init_model(int F, int Hd, int C,
                                           std::uint64_t seed,
                                           double momentum) {
  if (F < 1 || Hd < 1 || C < 1) {
    throw ConfigError("init_model: F, Hd and C must all be >= 1");
  }
  Rng rng(seed, Stream::kModelInit);
  ModelParams p = ModelParams::zeros(F, Hd, C);
  const double scale1 = 1.0 / std::sqrt(static_cast<double>(F));
  const double scale2 = 1.0 / std::sqrt(static_cast<double>(Hd));
  for (Eigen::Index r = 0; r < p.w1.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.w1.cols(); ++c) {
      p.w1(r, c) = rng.uniform(-1.0, 1.0) * scale1;
    }
  }
  for (Eigen::Index r = 0; r < p.w2.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.w2.cols(); ++c) {
      p.w2(r, c) = rng.uniform(-1.0, 1.0) * scale2;
    }
  }
  p.gamma.setOnes();
  return {std::move(p), BNStats::fresh(Hd, momentum)};
}

// ---------------------------------------------------------------------------
// Forward / backward

namespace {

void check_shapes(const ModelParams& params, const BNStats& stats,
                  const PixelBatch& batch) {
  if (batch.size() == 0) throw BatchError("empty pixel batch");
  if (batch.features.rows() != static_cast<Eigen::Index>(batch.size()) ||
      batch.features.cols() != params.input_dim()) {
    throw BatchError("pixel batch shape does not match the model input");
  }
  if (stats.running_mean.size() != params.hidden_dim() ||
      stats.running_var.size() != params.hidden_dim()) {
    throw BatchError("BN statistics width does not match the model");
  }
  for (int label : batch.labels) {
    if (label != kIgnoreLabel && (label < 0 || label >= params.n_classes())) {
      throw BatchError("pixel label " + std::to_string(label) + " out of range");
    }
  }
}

}  // namespace

ForwardResult forward(const ModelParams& params, const BNStats& stats,
                      const PixelBatch& batch, Mode mode) {
  check_shapes(params, stats, batch);
  const auto n = static_cast<Eigen::Index>(batch.size());
  if (mode == Mode::kTrain && n < 2) {
    throw BatchError("train-mode batch normalization needs at least 2 pixels");
  }
  ForwardResult out;
  ForwardCache& cache = out.cache;
  out.stats = stats;
  cache.input = batch.features;
  cache.pre_bn = batch.features * params.w1;
  cache.pre_bn.rowwise() += params.b1.transpose();

  if (mode == Mode::kTrain) {
    cache.mean = cache.pre_bn.colwise().mean().transpose();
    const RowMatrix centered = cache.pre_bn.rowwise() - cache.mean.transpose();
    const Eigen::VectorXd var =
        centered.array().square().colwise().mean().transpose();
    cache.inv_std = (var.array() + kBnEpsilon).rsqrt();
    const double m = stats.momentum;
    out.stats.running_mean = (1.0 - m) * stats.running_mean + m * cache.mean;
    out.stats.running_var = (1.0 - m) * stats.running_var + m * var;
    out.stats.steps = stats.steps + 1;
  } else {
    cache.mean = stats.running_mean;
    cache.inv_std = (stats.running_var.array() + kBnEpsilon).rsqrt();
  }
  cache.normalized = (cache.pre_bn.rowwise() - cache.mean.transpose()).array().rowwise() *
                     cache.inv_std.transpose().array();
  cache.affine = cache.normalized.array().rowwise() * params.gamma.transpose().array();
  cache.affine.rowwise() += params.beta.transpose();
  cache.hidden = cache.affine.cwiseMax(0.0);
  out.logits = cache.hidden * params.w2;
  out.logits.rowwise() += params.b2.transpose();
  return out;
}

namespace {

// Row-wise softmax probabilities and the mean cross-entropy over labeled rows.
std::pair<RowMatrix, double> softmax_xent(const RowMatrix& logits,
                                          const std::vector<int>& labels,
                                          std::size_t labeled) {
  RowMatrix probs(logits.rows(), logits.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double peak = logits.row(i).maxCoeff();
    double denom = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      probs(i, c) = std::exp(logits(i, c) - peak);
      denom += probs(i, c);
    }
    probs.row(i) /= denom;
    if (labels[i] != kIgnoreLabel) {
      loss -= logits(i, labels[i]) - peak - std::log(denom);
    }
  }
  return {std::move(probs), loss / static_cast<double>(labeled)};
}

std::size_t count_labeled(const std::vector<int>& labels) {
  return static_cast<std::size_t>(std::count_if(
      labels.begin(), labels.end(), [](int l) { return l != kIgnoreLabel; }));
}

}  // namespace

LossAndGrad loss_and_grad(const ModelParams& params, const BNStats& stats,
                          const PixelBatch& batch) {
  const std::size_t labeled = count_labeled(batch.labels);
  if (labeled == 0) throw LossError("every pixel in the batch is ignored");
  ForwardResult fwd = forward(params, stats, batch, Mode::kTrain);
  const ForwardCache& cache = fwd.cache;
  auto [probs, loss] = softmax_xent(fwd.logits, batch.labels, labeled);

  const auto n = static_cast<double>(batch.size());
  RowMatrix d_logits = std::move(probs);
  for (Eigen::Index i = 0; i < d_logits.rows(); ++i) {
    if (batch.labels[i] == kIgnoreLabel) {
      d_logits.row(i).setZero();
    } else {
      d_logits(i, batch.labels[i]) -= 1.0;
    }
  }
  d_logits /= static_cast<double>(labeled);

  LossAndGrad out;
  out.loss = loss;
  out.stats = std::move(fwd.stats);
  ModelParams& g = out.grads;
  g.w2 = cache.hidden.transpose() * d_logits;
  g.b2 = d_logits.colwise().sum().transpose();
  RowMatrix d_affine = d_logits * params.w2.transpose();
  d_affine = (cache.affine.array() > 0.0).select(d_affine, 0.0);
  g.gamma = (d_affine.array() * cache.normalized.array()).colwise().sum().transpose();
  g.beta = d_affine.colwise().sum().transpose();

  // d pre_bn = inv_std / N * (N * dxhat - sum(dxhat) - xhat * sum(dxhat * xhat))
  const RowMatrix d_norm =
      d_affine.array().rowwise() * params.gamma.transpose().array();
  const Eigen::RowVectorXd sum_d = d_norm.colwise().sum();
  const Eigen::RowVectorXd sum_dx =
      (d_norm.array() * cache.normalized.array()).colwise().sum();
  RowMatrix d_pre = n * d_norm.array();
  d_pre.rowwise() -= sum_d;
  d_pre -= (cache.normalized.array().rowwise() * sum_dx.array()).matrix();
  d_pre = d_pre.array().rowwise() * (cache.inv_std.transpose().array() / n);

  g.w1 = cache.input.transpose() * d_pre;
  g.b1 = d_pre.colwise().sum().transpose();
  return out;
}

double eval_loss(const ModelParams& params, const BNStats& stats,
                 const PixelBatch& batch) {
  const std::size_t labeled = count_labeled(batch.labels);
  if (labeled == 0) throw LossError("every pixel in the batch is ignored");
  const auto fwd = forward(params, stats, batch, Mode::kEval);
  return softmax_xent(fwd.logits, batch.labels, labeled).second;
}

// ---------------------------------------------------------------------------
// Local training

LocalTrainResult local_train(const ModelParams& params, const BNStats& stats,
                             std::span<const SamplePtr> client_data,
                             const LocalTrainConfig& config,
                             const SampleTransform& transform,
                             std::uint64_t seed) {
  if (client_data.empty()) throw BatchError("local_train: client has no data");
  if (config.batch_size < 2) throw ConfigError("local_train: batch_size must be >= 2");
  if (config.epochs < 1) throw ConfigError("local_train: epochs must be >= 1");

  Rng rng(seed, Stream::kLocalTrain);
  LocalTrainResult out{params, stats, 0.0, 0};
  const auto batch = static_cast<std::size_t>(config.batch_size);
  std::vector<std::size_t> order(client_data.size());
  std::vector<std::size_t> pixels;
  double epoch_loss_total = 0.0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t loss_batches = 0;
    for (auto idx : order) {
      const Sample sample = transform ? transform(*client_data[idx]) : *client_data[idx];
      const std::size_t n_pixels = sample.pixel_count();
      if (n_pixels < 2) {
        throw BatchError("sample '" + sample.id + "' has fewer than 2 pixels");
      }
      pixels.resize(n_pixels);
      std::iota(pixels.begin(), pixels.end(), std::size_t{0});
      rng.shuffle(pixels);
      std::size_t start = 0;
      while (start < n_pixels) {
        std::size_t end = std::min(start + batch, n_pixels);
        if (n_pixels - end == 1) end = n_pixels;
        const PixelBatch pb = batch_from_sample(
            sample, std::span<const std::size_t>(pixels).subspan(start, end - start));
        start = end;
        if (count_labeled(pb.labels) == 0) {
          out.stats = forward(out.params, out.stats, pb, Mode::kTrain).stats;
          continue;
        }
        LossAndGrad lg = loss_and_grad(out.params, out.stats, pb);
        out.stats = std::move(lg.stats);
        out.params.w1 -= config.lr * lg.grads.w1;
        out.params.b1 -= config.lr * lg.grads.b1;
        out.params.gamma -= config.lr * lg.grads.gamma;
        out.params.beta -= config.lr * lg.grads.beta;
        out.params.w2 -= config.lr * lg.grads.w2;
        out.params.b2 -= config.lr * lg.grads.b2;
        loss_sum += lg.loss;
        ++loss_batches;
        ++out.steps;
      }
    }
    epoch_loss_total += loss_batches ? loss_sum / static_cast<double>(loss_batches) : 0.0;
  }
  out.mean_epoch_loss = epoch_loss_total / static_cast<double>(config.epochs);
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

std::vector<std::string_view> non_empty_lines(const std::string& text) {
  std::vector<std::string_view> lines;
  for (auto line : text::split(text, '\n')) {
    if (!text::trim(line).empty()) lines.push_back(text::trim(line));
  }
  return lines;
}

}  // namespace

std::string params_to_text(const ModelParams& params) {
  std::string out = std::to_string(params.input_dim()) + " " +
                    std::to_string(params.hidden_dim()) + " " +
                    std::to_string(params.n_classes()) + "\n";
  const Eigen::VectorXd flat = params.flatten();
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    out += text::format_double(flat[i]);
    out += '\n';
  }
  return out;
}

ModelParams params_from_text(const std::string& text) {
  const auto lines = non_empty_lines(text);
  if (lines.empty()) throw IngestionError("empty parameter checkpoint");
  const auto header = text::split_whitespace(lines[0]);
  if (header.size() != 3) throw IngestionError("checkpoint header must be 'F Hd C'");
  int dims[3];
  for (int k = 0; k < 3; ++k) {
    auto v = text::parse_int(header[k]);
    if (!v || *v < 1) throw IngestionError("bad checkpoint header value");
    dims[k] = static_cast<int>(*v);
  }
  const std::size_t expected = ModelParams::flat_size(dims[0], dims[1], dims[2]);
  if (lines.size() - 1 != expected) {
    throw IngestionError("checkpoint has " + std::to_string(lines.size() - 1) +
                         " values, expected " + std::to_string(expected));
  }
  Eigen::VectorXd flat(static_cast<Eigen::Index>(expected));
  for (std::size_t i = 0; i < expected; ++i) {
    auto v = text::parse_double(lines[i + 1]);
    if (!v || !std::isfinite(*v)) {
      throw IngestionError("bad checkpoint value on line " + std::to_string(i + 2));
    }
    flat[static_cast<Eigen::Index>(i)] = *v;
  }
  return ModelParams::unflatten(flat, dims[0], dims[1], dims[2]);
}

std::string stats_to_text(const BNStats& stats) {
  std::string out = std::to_string(stats.running_mean.size()) + " " +
                    text::format_double(stats.momentum) + " " +
                    std::to_string(stats.steps) + "\n";
  auto row = [&](const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (i) out += ' ';
      out += text::format_double(v[i]);
    }
    out += '\n';
  };
  row(stats.running_mean);
  row(stats.running_var);
  return out;
}

BNStats stats_from_text(const std::string& text) {
  const auto lines = non_empty_lines(text);
  if (lines.size() != 3) throw IngestionError("BN statistics file must have 3 lines");
  const auto header = text::split_whitespace(lines[0]);
  if (header.size() != 3) throw IngestionError("bad BN statistics header");
  auto hd = text::parse_int(header[0]);
  auto momentum = text::parse_double(header[1]);
  auto steps = text::parse_int(header[2]);
  if (!hd || *hd < 1 || !momentum || !steps || *steps < 0) {
    throw IngestionError("bad BN statistics header");
  }
  BNStats s = BNStats::fresh(static_cast<int>(*hd), *momentum);
  s.steps = static_cast<std::uint64_t>(*steps);
  auto read_row = [&](std::string_view line, Eigen::VectorXd& v) {
    const auto tokens = text::split_whitespace(line);
    if (tokens.size() != static_cast<std::size_t>(v.size())) {
      throw IngestionError("BN statistics row has wrong width");
    }
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      auto x = text::parse_double(tokens[i]);
      if (!x) throw IngestionError("bad BN statistics value");
      v[static_cast<Eigen::Index>(i)] = *x;
    }
  };
  read_row(lines[1], s.running_mean);
  read_row(lines[2], s.running_var);
  if ((s.running_var.array() < 0.0).any()) {
    throw IngestionError("BN running variance must be non-negative");
  }
  return s;
}

}  // namespace fedsim::model
