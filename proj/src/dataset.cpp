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
#include "fedsim/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "fedsim/errors.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/text_io.hpp"

namespace fedsim {

std::string to_string(const DomainKey& key) {
  return "(" + std::to_string(key.weather) + "," +
         std::to_string(key.viewpoint) + "," + std::to_string(key.town) + ")";
}

bool GridDims::contains(const DomainKey& key) const {
  return key.weather >= 0 && key.weather < n_weathers && key.viewpoint >= 0 &&
         key.viewpoint < n_viewpoints && key.town >= 0 && key.town < n_towns;
}

std::size_t GridDims::index_of(const DomainKey& key) const {
  return (static_cast<std::size_t>(key.weather) * n_viewpoints +
          key.viewpoint) * n_towns + key.town;
}

DomainKey GridDims::key_at(std::size_t index) const {
  DomainKey key;
  key.town = static_cast<int>(index % n_towns);
  index /= n_towns;
  key.viewpoint = static_cast<int>(index % n_viewpoints);
  key.weather = static_cast<int>(index / n_viewpoints);
  return key;
}

std::set<int> class_presence(const Sample& sample) {
  std::set<int> present;
  for (int label : sample.labels) {
    if (label != kIgnoreLabel) present.insert(label);
  }
  return present;
}

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(std::vector<SamplePtr> samples, int n_classes,
                 int feature_dim, GridDims grid)
    : samples_(std::move(samples)),
      n_classes_(n_classes),
      feature_dim_(feature_dim),
      grid_(grid) {
  if (n_classes_ < 1) throw DataError("dataset needs at least one class");
  index_.reserve(samples_.size());
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const Sample& s = *samples_[i];
    if (!index_.emplace(s.id, i).second) {
      throw DataError("duplicate sample id '" + s.id + "'");
    }
    if (!grid_.contains(s.domain)) {
      throw DataError("sample '" + s.id + "' has domain " +
                      to_string(s.domain) + " outside the grid");
    }
    if (s.labels.size() != s.pixel_count()) {
      throw DataError("sample '" + s.id + "' label grid shape mismatch");
    }
    if (s.has_features() &&
        (s.feature_dim != feature_dim_ ||
         s.features.size() != s.pixel_count() * feature_dim_)) {
      throw DataError("sample '" + s.id + "' feature grid shape mismatch");
    }
    for (int label : s.labels) {
      if (label != kIgnoreLabel && (label < 0 || label >= n_classes_)) {
        throw DataError("sample '" + s.id + "' has label " +
                        std::to_string(label) + " outside [0, " +
                        std::to_string(n_classes_) + ")");
      }
    }
  }
}

std::optional<std::size_t> Dataset::find(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Dataset::index_of(const std::string& id) const {
  if (auto i = find(id)) return *i;
  throw DataError("unknown sample id '" + id + "'");
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<SamplePtr> picked;
  picked.reserve(indices.size());
  for (auto i : indices) picked.push_back(samples_.at(i));
  return Dataset(std::move(picked), n_classes_, feature_dim_, grid_);
}

std::vector<DomainKey> Dataset::domains() const {
  std::set<DomainKey> keys;
  for (const auto& s : samples_) keys.insert(s->domain);
  return {keys.begin(), keys.end()};
}

bool Dataset::same_contents(const Dataset& other) const {
  if (n_classes_ != other.n_classes_ || feature_dim_ != other.feature_dim_ ||
      !(grid_ == other.grid_) || size() != other.size()) {
    return false;
  }
  for (std::size_t i = 0; i < size(); ++i) {
    if (!(*samples_[i] == *other.samples_[i])) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Synthetic generation

void SyntheticSpec::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError("synthetic spec: " + field + " " + why);
  };
  if (grid.n_weathers < 1 || grid.n_viewpoints < 1 || grid.n_towns < 1) {
    fail("grid", "dimensions must be >= 1");
  }
  if (images_per_domain < 1) fail("images_per_domain", "must be >= 1");
  if (height < 1 || width < 1) fail("height/width", "must be >= 1");
  if (feature_dim < 1) fail("feature_dim", "must be >= 1");
  if (n_classes < 1) fail("n_classes", "must be >= 1");
  if (block_size < 1) fail("block_size", "must be >= 1");
  if (!(noise_std >= 0.0)) fail("noise_std", "must be >= 0");
  if (!(class_separation >= 0.0)) fail("class_separation", "must be >= 0");
  if (!(domain_shift >= 0.0)) fail("domain_shift", "must be >= 0");
  if (!(ignore_block_prob >= 0.0 && ignore_block_prob < 1.0)) {
    fail("ignore_block_prob", "must lie in [0, 1)");
  }
  if (!class_weights.empty()) {
    if (class_weights.size() != static_cast<std::size_t>(n_classes)) {
      fail("class_weights", "must have n_classes entries");
    }
    for (double w : class_weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) {
        fail("class_weights", "entries must be finite and >= 0");
      }
    }
  }
  if (zeroed_per_town < 0) fail("zeroed_per_town", "must be >= 0");
  if (!zeroed_by_domain.empty()) {
    if (zeroed_by_domain.size() != grid.domain_count()) {
      fail("zeroed_by_domain", "must have one entry per domain");
    }
    for (const auto& classes : zeroed_by_domain) {
      for (int c : classes) {
        if (c < 0 || c >= n_classes) fail("zeroed_by_domain", "class out of range");
      }
    }
  }
  for (std::size_t d = 0; d < grid.domain_count(); ++d) {
    const auto profile_zeroed = zeroed_classes(grid.key_at(d));
    double total = 0.0;
    for (int c = 0; c < n_classes; ++c) {
      if (std::find(profile_zeroed.begin(), profile_zeroed.end(), c) ==
          profile_zeroed.end()) {
        total += class_weights.empty() ? 1.0 : class_weights[c];
      }
    }
    if (!(total > 0.0)) {
      fail("class profile", "of domain " + to_string(grid.key_at(d)) +
                                " is not normalizable");
    }
  }
}

std::vector<int> SyntheticSpec::zeroed_classes(const DomainKey& key) const {
  if (!zeroed_by_domain.empty()) {
    return zeroed_by_domain.at(grid.index_of(key));
  }
  std::vector<int> zeroed;
  const int k = std::min(zeroed_per_town, n_classes);
  for (int j = 0; j < k; ++j) {
    const int c = (k * key.town + j) % n_classes;
    if (std::find(zeroed.begin(), zeroed.end(), c) == zeroed.end()) {
      zeroed.push_back(c);
    }
  }
  std::sort(zeroed.begin(), zeroed.end());
  return zeroed;
}

std::vector<double> SyntheticSpec::class_profile(const DomainKey& key) const {
  std::vector<double> profile(n_classes);
  for (int c = 0; c < n_classes; ++c) {
    profile[c] = class_weights.empty() ? 1.0 : class_weights[c];
  }
  for (int c : zeroed_classes(key)) profile[c] = 0.0;
  const double total = std::accumulate(profile.begin(), profile.end(), 0.0);
  if (!(total > 0.0)) {
    throw ConfigError("class profile of domain " + to_string(key) +
                      " is not normalizable");
  }
  for (double& p : profile) p /= total;
  return profile;
}

namespace {

std::vector<double> random_unit_vector(Rng& rng, int dim) {
  std::vector<double> v(dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& x : v) {
      x = rng.normal();
      norm += x * x;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

int draw_categorical(Rng& rng, const std::vector<double>& profile) {
  const double u = rng.uniform();
  double acc = 0.0;
  int last_positive = 0;
  for (std::size_t c = 0; c < profile.size(); ++c) {
    if (profile[c] <= 0.0) continue;
    last_positive = static_cast<int>(c);
    acc += profile[c];
    if (u < acc) return static_cast<int>(c);
  }
  return last_positive;
}

std::string sample_id(const DomainKey& key, int image) {
  std::string idx = std::to_string(image);
  if (idx.size() < 3) idx.insert(0, 3 - idx.size(), '0');
  return "w" + std::to_string(key.weather) + "_v" +
         std::to_string(key.viewpoint) + "_t" + std::to_string(key.town) +
         "_" + idx;
}

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const int F = spec.feature_dim;
  const int C = spec.n_classes;

  // Shared geometry: class prototypes and the per-axis domain components.
  Rng shape_rng(spec.seed, Stream::kSyntheticShape);
  std::vector<std::vector<double>> prototypes;
  for (int c = 0; c < C; ++c) {
    auto v = random_unit_vector(shape_rng, F);
    for (double& x : v) x *= spec.class_separation;
    prototypes.push_back(std::move(v));
  }
  auto axis_components = [&](int count) {
    std::vector<std::vector<double>> out;
    for (int i = 0; i < count; ++i) out.push_back(random_unit_vector(shape_rng, F));
    return out;
  };
  const auto weather_dirs = axis_components(spec.grid.n_weathers);
  const auto viewpoint_dirs = axis_components(spec.grid.n_viewpoints);
  const auto town_dirs = axis_components(spec.grid.n_towns);
  const double axis_scale = spec.domain_shift / std::sqrt(3.0);

  const int blocks_y = (spec.height + spec.block_size - 1) / spec.block_size;
  const int blocks_x = (spec.width + spec.block_size - 1) / spec.block_size;

  std::vector<SamplePtr> samples;
  samples.reserve(spec.grid.domain_count() * spec.images_per_domain);
  for (std::size_t d = 0; d < spec.grid.domain_count(); ++d) {
    const DomainKey key = spec.grid.key_at(d);
    const auto profile = spec.class_profile(key);
    std::vector<double> offset(F);
    for (int f = 0; f < F; ++f) {
      offset[f] = axis_scale * (weather_dirs[key.weather][f] +
                                viewpoint_dirs[key.viewpoint][f] +
                                town_dirs[key.town][f]);
    }
    for (int image = 0; image < spec.images_per_domain; ++image) {
      Rng rng(spec.seed, Stream::kSyntheticSample,
              {d, static_cast<std::uint64_t>(image)});
      std::vector<int> block_labels(blocks_y * blocks_x);
      bool any_labeled = false;
      for (int& label : block_labels) {
        if (rng.uniform() < spec.ignore_block_prob) {
          label = kIgnoreLabel;
        } else {
          label = draw_categorical(rng, profile);
          any_labeled = true;
        }
      }
      if (!any_labeled) block_labels[0] = draw_categorical(rng, profile);

      auto sample = std::make_shared<Sample>();
      sample->id = sample_id(key, image);
      sample->domain = key;
      sample->height = spec.height;
      sample->width = spec.width;
      sample->feature_dim = F;
      sample->labels.resize(sample->pixel_count());
      sample->features.resize(sample->pixel_count() * F);
      for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
          const std::size_t p = static_cast<std::size_t>(y) * spec.width + x;
          const int label =
              block_labels[(y / spec.block_size) * blocks_x + x / spec.block_size];
          sample->labels[p] = label;
          // Ignore pixels still carry features of some class; draw one from
          // the profile so the pixel stays on the data manifold.
          const int feature_class =
              label == kIgnoreLabel ? draw_categorical(rng, profile) : label;
          double* out = sample->features.data() + p * F;
          for (int f = 0; f < F; ++f) {
            out[f] = prototypes[feature_class][f] + offset[f] +
                     spec.noise_std * rng.normal();
          }
        }
      }
      samples.push_back(std::move(sample));
    }
  }
  return Dataset(std::move(samples), C, F, spec.grid);
}

// ---------------------------------------------------------------------------
// Manifest I/O

namespace {

struct LineReader {
  explicit LineReader(std::string contents) : text(std::move(contents)) {}
  std::optional<std::string_view> next() {
    if (pos >= text.size()) return std::nullopt;
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
  }
  std::string text;
  std::size_t pos = 0;
};

int parse_int_field(std::string_view token, const std::string& context) {
  auto v = text::parse_int(token);
  if (!v) {
    throw IngestionError(context + ": expected integer, got '" +
                         std::string(token) + "'");
  }
  return static_cast<int>(*v);
}

std::vector<int> read_label_file(const std::filesystem::path& path,
                                 const std::string& context, int& height,
                                 int& width) {
  LineReader reader(text::read_file(path));
  auto header = reader.next();
  if (!header) throw IngestionError(context + ": empty label file");
  auto dims = text::split_whitespace(*header);
  if (dims.size() != 2) throw IngestionError(context + ": bad label header");
  height = parse_int_field(dims[0], context);
  width = parse_int_field(dims[1], context);
  if (height < 1 || width < 1) {
    throw IngestionError(context + ": label grid must be non-empty");
  }
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(height) * width);
  for (int y = 0; y < height; ++y) {
    auto line = reader.next();
    if (!line) throw IngestionError(context + ": label file has too few rows");
    auto row = text::split_whitespace(*line);
    if (row.size() != static_cast<std::size_t>(width)) {
      throw IngestionError(context + ": label row " + std::to_string(y) +
                           " has " + std::to_string(row.size()) +
                           " values, expected " + std::to_string(width));
    }
    for (auto token : row) labels.push_back(parse_int_field(token, context));
  }
  return labels;
}

std::vector<double> read_feature_file(const std::filesystem::path& path,
                                      const std::string& context, int height,
                                      int width, int& feature_dim) {
  LineReader reader(text::read_file(path));
  auto header = reader.next();
  if (!header) throw IngestionError(context + ": empty feature file");
  auto dims = text::split_whitespace(*header);
  if (dims.size() != 3) throw IngestionError(context + ": bad feature header");
  const int h = parse_int_field(dims[0], context);
  const int w = parse_int_field(dims[1], context);
  feature_dim = parse_int_field(dims[2], context);
  if (h != height || w != width) {
    throw IngestionError(context + ": feature grid " + std::to_string(h) + "x" +
                         std::to_string(w) + " does not match label grid " +
                         std::to_string(height) + "x" + std::to_string(width));
  }
  if (feature_dim < 1) throw IngestionError(context + ": feature dim must be >= 1");
  std::vector<double> features;
  features.reserve(static_cast<std::size_t>(h) * w * feature_dim);
  for (int p = 0; p < h * w; ++p) {
    auto line = reader.next();
    if (!line) throw IngestionError(context + ": feature file has too few rows");
    auto row = text::split_whitespace(*line);
    if (row.size() != static_cast<std::size_t>(feature_dim)) {
      throw IngestionError(context + ": feature row " + std::to_string(p) +
                           " has wrong width");
    }
    for (auto token : row) {
      auto v = text::parse_double(token);
      if (!v || !std::isfinite(*v)) {
        throw IngestionError(context + ": bad feature value '" +
                             std::string(token) + "'");
      }
      features.push_back(*v);
    }
  }
  return features;
}

}  // namespace

Dataset load_manifest(const std::filesystem::path& path,
                      const ManifestOptions& options) {
  if (!std::filesystem::exists(path)) {
    throw IngestionError("manifest '" + path.string() + "' does not exist");
  }
  if (options.n_classes < 1) {
    throw ConfigError("load_manifest: n_classes must be >= 1");
  }
  const auto base = path.parent_path();
  LineReader reader(text::read_file(path));
  std::vector<std::shared_ptr<Sample>> loaded;
  std::optional<int> feature_dim;
  bool any_label_only = false;
  GridDims inferred{0, 0, 0};
  std::size_t line_no = 0;
  while (auto line = reader.next()) {
    ++line_no;
    if (text::trim(*line).empty()) continue;
    auto fields = text::split(*line, '\t');
    std::string context = "manifest line " + std::to_string(line_no);
    if (fields.size() != 5 && fields.size() != 6) {
      throw IngestionError(context + ": expected 5 or 6 tab-separated fields, got " +
                           std::to_string(fields.size()));
    }
    auto sample = std::make_shared<Sample>();
    sample->id = std::string(fields[0]);
    if (sample->id.empty()) throw IngestionError(context + ": empty sample id");
    context += " (sample '" + sample->id + "')";
    sample->domain.weather = parse_int_field(fields[1], context);
    sample->domain.viewpoint = parse_int_field(fields[2], context);
    sample->domain.town = parse_int_field(fields[3], context);
    if (sample->domain.weather < 0 || sample->domain.viewpoint < 0 ||
        sample->domain.town < 0) {
      throw IngestionError(context + ": negative domain index");
    }
    if (options.grid && !options.grid->contains(sample->domain)) {
      throw IngestionError(context + ": domain " + to_string(sample->domain) +
                           " outside the declared grid");
    }
    inferred.n_weathers = std::max(inferred.n_weathers, sample->domain.weather + 1);
    inferred.n_viewpoints = std::max(inferred.n_viewpoints, sample->domain.viewpoint + 1);
    inferred.n_towns = std::max(inferred.n_towns, sample->domain.town + 1);

    sample->labels = read_label_file(base / std::string(fields[4]), context,
                                     sample->height, sample->width);
    for (int label : sample->labels) {
      if (label != kIgnoreLabel && (label < 0 || label >= options.n_classes)) {
        throw IngestionError(context + ": label " + std::to_string(label) +
                             " outside [0, " + std::to_string(options.n_classes) +
                             ")");
      }
    }
    if (fields.size() == 6 && !text::trim(fields[5]).empty()) {
      int f = 0;
      sample->features = read_feature_file(base / std::string(fields[5]), context,
                                           sample->height, sample->width, f);
      if (feature_dim && *feature_dim != f) {
        throw IngestionError(context + ": feature dim " + std::to_string(f) +
                             " differs from earlier records (" +
                             std::to_string(*feature_dim) + ")");
      }
      feature_dim = f;
      sample->feature_dim = f;
    } else {
      any_label_only = true;
    }
    loaded.push_back(std::move(sample));
  }
  if (loaded.empty()) throw IngestionError("manifest '" + path.string() + "' is empty");
  if (feature_dim && any_label_only) {
    throw IngestionError("manifest mixes records with and without features");
  }
  const int F = feature_dim.value_or(0);
  std::vector<SamplePtr> samples;
  samples.reserve(loaded.size());
  for (auto& s : loaded) {
    // Label-only samples still advertise the dataset-wide feature dim.
    s->feature_dim = F;
    samples.push_back(std::move(s));
  }
  try {
    return Dataset(std::move(samples), options.n_classes, F,
                   options.grid.value_or(inferred));
  } catch (const DataError& e) {
    throw IngestionError(e.what());
  }
}

std::filesystem::path write_manifest(const Dataset& dataset,
                                     const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "labels");
  std::string manifest;
  for (const auto& ptr : dataset.samples()) {
    const Sample& s = *ptr;
    const std::string label_rel = "labels/" + s.id + ".txt";
    std::string labels =
        std::to_string(s.height) + " " + std::to_string(s.width) + "\n";
    for (int y = 0; y < s.height; ++y) {
      for (int x = 0; x < s.width; ++x) {
        if (x) labels += ' ';
        labels += std::to_string(s.labels[static_cast<std::size_t>(y) * s.width + x]);
      }
      labels += '\n';
    }
    text::write_file(dir / label_rel, labels);
    manifest += s.id + "\t" + std::to_string(s.domain.weather) + "\t" +
                std::to_string(s.domain.viewpoint) + "\t" +
                std::to_string(s.domain.town) + "\t" + label_rel;
    if (s.has_features()) {
      const std::string feature_rel = "features/" + s.id + ".txt";
      std::string features = std::to_string(s.height) + " " +
                             std::to_string(s.width) + " " +
                             std::to_string(s.feature_dim) + "\n";
      for (std::size_t p = 0; p < s.pixel_count(); ++p) {
        const auto row = s.pixel_features(p);
        features += text::join(row, " ", text::format_double);
        features += '\n';
      }
      text::write_file(dir / feature_rel, features);
      manifest += "\t" + feature_rel;
    }
    manifest += '\n';
  }
  const auto path = dir / "manifest.tsv";
  text::write_file(path, manifest);
  return path;
}

// ---------------------------------------------------------------------------
// Splitting

SplitResult split_seen_unseen(const Dataset& dataset,
                              const DomainPredicate& unseen,
                              int seen_per_domain, std::uint64_t seed) {
  if (seen_per_domain < 0) throw SplitError("seen_per_domain must be >= 0");
  std::map<DomainKey, std::vector<std::size_t>> by_domain;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    by_domain[dataset[i].domain].push_back(i);
  }
  enum class Role { kTrain, kSeen, kUnseen };
  std::vector<Role> role(dataset.size(), Role::kTrain);
  for (const auto& [key, members] : by_domain) {
    if (unseen(key)) {
      for (auto i : members) role[i] = Role::kUnseen;
      continue;
    }
    if (seen_per_domain == 0) continue;
    if (members.size() < static_cast<std::size_t>(seen_per_domain) + 1) {
      throw SplitError("domain " + to_string(key) + " has " +
                       std::to_string(members.size()) +
                       " images; need at least " +
                       std::to_string(seen_per_domain + 1) +
                       " to draw a seen test set and keep training data");
    }
    Rng rng(seed, Stream::kSplit, {dataset.grid().index_of(key)});
    for (auto pos : rng.sample_indices(members.size(), seen_per_domain)) {
      role[members[pos]] = Role::kSeen;
    }
  }
  std::vector<std::size_t> train, seen, unseen_ids;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    switch (role[i]) {
      case Role::kTrain: train.push_back(i); break;
      case Role::kSeen: seen.push_back(i); break;
      case Role::kUnseen: unseen_ids.push_back(i); break;
    }
  }
  return {dataset.subset(train), dataset.subset(seen),
          dataset.subset(unseen_ids)};
}

SampleTransform identity_transform() {
  return [](const Sample& s) { return s; };
}

SampleTransform transform_by_name(const std::string& name) {
  if (name == "identity" || name.empty()) return identity_transform();
  throw ConfigError("unknown sample transform '" + name +
                    "' (available: identity)");
}

}  // namespace fedsim
