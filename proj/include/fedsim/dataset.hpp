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

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace fedsim {

// Label value excluded from losses, metrics and class presence.
inline constexpr int kIgnoreLabel = -1;

// One (weather, viewpoint, town) triple.
struct DomainKey {
  int weather = 0;
  int viewpoint = 0;
  int town = 0;

  friend auto operator<=>(const DomainKey&, const DomainKey&) = default;
};

std::string to_string(const DomainKey& key);

struct GridDims {
  int n_weathers = 1;
  int n_viewpoints = 1;
  int n_towns = 1;

  friend bool operator==(const GridDims&, const GridDims&) = default;

  std::size_t domain_count() const {
    return static_cast<std::size_t>(n_weathers) * n_viewpoints * n_towns;
  }
  bool contains(const DomainKey& key) const;
  // Row-major over (weather, viewpoint, town).
  std::size_t index_of(const DomainKey& key) const;
  DomainKey key_at(std::size_t index) const;
};

/*!
 * One labeled image.
 *
 * `features` is row-major H*W*F; it may be empty for label-only samples
 * loaded from a manifest without feature files.
 */
struct Sample {
  std::string id;
  DomainKey domain;
  int height = 0;
  int width = 0;
  int feature_dim = 0;
  std::vector<double> features;
  std::vector<int> labels;

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(height) * width;
  }
  bool has_features() const { return !features.empty(); }
  std::span<const double> pixel_features(std::size_t pixel) const {
    return {features.data() + pixel * feature_dim,
            static_cast<std::size_t>(feature_dim)};
  }

  friend bool operator==(const Sample&, const Sample&) = default;
};

using SamplePtr = std::shared_ptr<const Sample>;

// Classes with at least one non-ignore pixel.
std::set<int> class_presence(const Sample& sample);

/*!
 * Ordered, immutable collection of samples sharing C, F and a domain grid.
 *
 * Samples are held by shared pointer so train/test splits and client views
 * share pixel storage. The constructor validates every invariant (unique ids,
 * domains inside the grid, label bounds, shapes) and throws DataError.
 */
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<SamplePtr> samples, int n_classes, int feature_dim,
          GridDims grid);

  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const Sample& operator[](std::size_t i) const { return *samples_[i]; }
  const SamplePtr& ptr(std::size_t i) const { return samples_[i]; }
  const std::vector<SamplePtr>& samples() const { return samples_; }

  int n_classes() const { return n_classes_; }
  int feature_dim() const { return feature_dim_; }
  const GridDims& grid() const { return grid_; }

  std::optional<std::size_t> find(const std::string& id) const;
  // Throws DataError if the id is unknown.
  std::size_t index_of(const std::string& id) const;

  // Samples at the given positions, in the given order.
  Dataset subset(std::span<const std::size_t> indices) const;

  // Distinct domains in ascending DomainKey order.
  std::vector<DomainKey> domains() const;

  // Deep value equality (metadata and every sample).
  bool same_contents(const Dataset& other) const;

 private:
  std::vector<SamplePtr> samples_;
  int n_classes_ = 0;
  int feature_dim_ = 0;
  GridDims grid_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct SyntheticSpec {
  GridDims grid{3, 5, 7};
  int images_per_domain = 60;
  int height = 16;
  int width = 16;
  int feature_dim = 8;
  int n_classes = 8;
  // Labels are constant over block_size x block_size tiles.
  int block_size = 4;
  double class_separation = 3.0;
  double domain_shift = 2.0;
  double noise_std = 1.0;
  // Probability that a label tile is marked ignore.
  double ignore_block_prob = 0.05;
  // Base class frequencies before zeroing; empty means uniform.
  std::vector<double> class_weights;
  // Default label skew: town t zeroes classes (k*t + j) mod C, j < k.
  int zeroed_per_town = 2;
  // Optional explicit zeroed classes per domain index; overrides the
  // rotating rule when non-empty (must then have domain_count() entries).
  std::vector<std::vector<int>> zeroed_by_domain;
  std::uint64_t seed = 0;

  friend bool operator==(const SyntheticSpec&, const SyntheticSpec&) = default;

  // Throws ConfigError naming the offending field.
  void validate() const;
  // Normalized class profile of one domain (zeroed classes at 0).
  std::vector<double> class_profile(const DomainKey& key) const;
  std::vector<int> zeroed_classes(const DomainKey& key) const;
};

// Samples are ordered by domain index, then image index; ids are
// "w<weather>_v<viewpoint>_t<town>_<image>".
Dataset generate_synthetic(const SyntheticSpec& spec);

struct ManifestOptions {
  int n_classes = 0;
  // Derived from the largest indices in the manifest when absent.
  std::optional<GridDims> grid;
};

Dataset load_manifest(const std::filesystem::path& path,
                      const ManifestOptions& options);

// Writes `dir/manifest.tsv` plus one label file (and feature file, when the
// sample has features) per sample under `dir/`. Returns the manifest path.
std::filesystem::path write_manifest(const Dataset& dataset,
                                     const std::filesystem::path& dir);

using DomainPredicate = std::function<bool(const DomainKey&)>;

struct SplitResult {
  Dataset train;
  Dataset seen_test;
  Dataset unseen_test;
};

/*!
 * Seen/unseen train-test split.
 *
 * Every sample of a domain matching `unseen` goes to unseen_test. From each
 * remaining domain, `seen_per_domain` samples are drawn uniformly without
 * replacement into seen_test and the rest form train. Each subset keeps the
 * source order. Throws SplitError if a retained domain has fewer than
 * seen_per_domain + 1 samples.
 */
SplitResult split_seen_unseen(const Dataset& dataset,
                              const DomainPredicate& unseen,
                              int seen_per_domain, std::uint64_t seed);

// Client-side per-sample transform applied before batching. Only the
// identity ships; style-translation methods would plug in here.
using SampleTransform = std::function<Sample(const Sample&)>;

SampleTransform identity_transform();
// Resolves a transform by name; throws ConfigError for unknown names.
SampleTransform transform_by_name(const std::string& name);

}  // namespace fedsim
