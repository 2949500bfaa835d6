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

#include <map>
#include <vector>

#include "spikeslab/model.hpp"
#include "spikeslab/rng.hpp"
#include "spikeslab/support_set.hpp"

namespace spikeslab {

/// Exact (or Monte-Carlo, for the Laplace slab) posterior support law at
/// enumeration scale, used as ground truth in acceptance tests.
struct SupportPmf {
  std::map<SupportSet, double> entries;
  int domain_d = 0;
  /// Relative standard error of each unnormalized weight; empty for exact
  /// enumerations. Only the Laplace oracle is itself Monte Carlo.
  std::map<SupportSet, double> rel_stderr;

  double prob(const SupportSet& s) const {
    auto it = entries.find(s);
    return it == entries.end() ? 0.0 : it->second;
  }

  /// First-order bound on the TV error induced by the per-weight
  /// uncertainty: sum_S p_S * relative-stderr_S.
  double tv_uncertainty() const;

  void validate() const;  // probabilities sum to 1 within 1e-9

  SupportSet sample(RngStream& rng) const;
};

/// Brute-force 2^d enumeration of the Gaussian-slab posterior support law.
/// Refuses d > 24.
SupportPmf enumerate_posterior_gaussian(const Instance& instance);

/// Per-subset integration of the Laplace-slab posterior support weights:
/// tensor-grid quadrature for |S| <= quad_dim_limit, importance sampling
/// (Gaussian proposal at the l1-regularized mode, covariance A_S^{-1})
/// above it. Refuses d > 12. ESS below ess_floor raises an error naming
/// the subset.
SupportPmf enumerate_posterior_laplace(const Instance& instance, std::uint64_t mc_samples,
                                       RngStream& rng, int quad_dim_limit = 3,
                                       double ess_floor = 1e3);

/// 0.5 * sum |p - q| over the union of supports.
double tv_distance(const SupportPmf& p, const SupportPmf& q);

/// Frequency estimates from a list of draws.
SupportPmf empirical_support_pmf(const std::vector<SupportSet>& samples, int d);

}  // namespace spikeslab
