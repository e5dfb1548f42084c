// Copyright 2026 The mlgcp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace mlgcp {

/// Worker count to use when the caller asks for 0 ("auto").
std::size_t resolve_threads(std::size_t requested);

/// Runs task(index) for index in [0, count) on up to `threads` workers.
/// Tasks must write to disjoint outputs. The first exception thrown by a task
/// is rethrown after all workers have joined.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& task);

/// Counter-based seed derivation: a stable child seed for (master, a, b), so
/// that results never depend on scheduling order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

}  // namespace mlgcp
