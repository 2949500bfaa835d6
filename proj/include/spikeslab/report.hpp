// Copyright 2026 The spikeslab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License is
// distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and limitations under the License.

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>

namespace spikeslab {

/// Observability record emitted by the posterior samplers. The Laplace path
/// additionally fills the annealing counters; they stay zero on the Gaussian
/// path. Ratio extremes are kept in log scale internally and exponentiated
/// (with overflow clamping) at serialization time.
struct SamplerReport {
  std::uint64_t attempts = 0;
  std::uint64_t accepted = 0;
  double log_ratio_min = std::numeric_limits<double>::infinity();
  double log_ratio_max = -std::numeric_limits<double>::infinity();
  bool budget_exceeded = false;
  double wall_ms = 0.0;

  std::uint64_t z_estimates_computed = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t anneal_stage_failures = 0;

  void merge(const SamplerReport& other) {
    attempts += other.attempts;
    accepted += other.accepted;
    log_ratio_min = std::min(log_ratio_min, other.log_ratio_min);
    log_ratio_max = std::max(log_ratio_max, other.log_ratio_max);
    budget_exceeded = budget_exceeded || other.budget_exceeded;
    wall_ms += other.wall_ms;
    z_estimates_computed += other.z_estimates_computed;
    cache_hits += other.cache_hits;
    anneal_stage_failures += other.anneal_stage_failures;
  }
};

}  // namespace spikeslab
