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
#include <initializer_list>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace fedsim {

// Stream tags keep the randomness of each pipeline stage in its own
// sub-stream, so changing one stage never perturbs another.
enum class Stream : std::uint64_t {
  kSyntheticShape = 1,
  kSyntheticSample = 2,
  kSplit = 3,
  kSizePlan = 4,
  kUniformPartition = 5,
  kClassImbalance = 6,
  kModelInit = 7,
  kLocalTrain = 8,
  kClientSampling = 9,
  kTest = 100,
};

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Derives a sub-stream seed from a root seed, a stream tag and any number of
// integer coordinates (round index, client id, domain index...).
std::uint64_t derive_seed(std::uint64_t seed, Stream stream,
                          std::initializer_list<std::uint64_t> coords = {});

/*!
 * Seeded pseudo-random source.
 *
 * Wraps a 64-bit Mersenne Twister and implements every derived draw
 * (uniform reals, normals, bounded integers, shuffles) directly on the raw
 * 64-bit output, so streams are identical across standard libraries.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, Stream stream,
      std::initializer_list<std::uint64_t> coords = {})
      : engine_(derive_seed(seed, stream, coords)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the second variate is cached.
  double normal();

  // Uniform integer on [0, n). Requires n > 0.
  std::size_t below(std::size_t n);

  // Uniform integer on [lo, hi] inclusive.
  std::size_t between(std::size_t lo, std::size_t hi) {
    return lo + below(hi - lo + 1);
  }

  // Fisher-Yates shuffle, drawing below(i + 1) from the back.
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }
  template <typename T>
  void shuffle(std::vector<T>& items) {
    shuffle(std::span<T>(items));
  }

  // k distinct positions of [0, n), in draw order. Partial Fisher-Yates:
  // step i swaps slot i with slot i + below(n - i).
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace fedsim
