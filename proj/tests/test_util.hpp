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
#ifndef FEDSIM_TESTS_TEST_UTIL_HPP_
#define FEDSIM_TESTS_TEST_UTIL_HPP_

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "fedsim/dataset.hpp"
#include "fedsim/rng.hpp"

namespace fedsim::testing {

// A label-only sample with a 1 x labels.size() grid.
inline SamplePtr label_sample(const std::string& id, DomainKey domain,
                              std::vector<int> labels, int feature_dim = 0,
                              std::uint64_t feature_seed = 0) {
  auto s = std::make_shared<Sample>();
  s->id = id;
  s->domain = domain;
  s->height = 1;
  s->width = static_cast<int>(labels.size());
  s->feature_dim = feature_dim;
  s->labels = std::move(labels);
  if (feature_dim > 0) {
    Rng rng(feature_seed, Stream::kTest, {std::hash<std::string>{}(id)});
    s->features.resize(s->labels.size() * feature_dim);
    for (auto& f : s->features) f = rng.normal();
  }
  return s;
}

// Small synthetic spec that generates in milliseconds.
inline SyntheticSpec tiny_spec(GridDims grid = {2, 2, 2}, int images = 6) {
  SyntheticSpec spec;
  spec.grid = grid;
  spec.images_per_domain = images;
  spec.height = 4;
  spec.width = 4;
  spec.feature_dim = 3;
  spec.n_classes = 4;
  spec.block_size = 2;
  spec.zeroed_per_town = 1;
  spec.seed = 17;
  return spec;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("fedsim_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fedsim::testing

#endif  // FEDSIM_TESTS_TEST_UTIL_HPP_
