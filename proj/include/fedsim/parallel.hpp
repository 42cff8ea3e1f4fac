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
#include <functional>

namespace fedsim {

// Worker cap from FEDSIM_THREADS, falling back to the hardware concurrency.
// Always at least 1.
std::size_t default_thread_count();

// Runs fn(i) for every i in [0, n) on up to `threads` workers. Each index is
// executed exactly once; the first exception thrown by any task is rethrown
// on the calling thread after all workers have joined.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace fedsim
