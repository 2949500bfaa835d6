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

#include <Eigen/Dense>
#include <cstdint>
#include <optional>

#include "spikeslab/rng.hpp"
#include "spikeslab/support_set.hpp"

namespace spikeslab {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Diffuse { GaussianN01, Laplace01 };

/// Per-coordinate inclusion probabilities plus the slab density choice.
struct PriorSpec {
  VectorXd q;       // each entry in [0,1]
  Diffuse diffuse = Diffuse::GaussianN01;

  int d() const { return static_cast<int>(q.size()); }
  double expected_sparsity() const { return q.sum(); }  // k = sum_i q_i

  void validate() const;
};

/// One synthetic regression problem: y = X theta* + xi, with the generating
/// randomness kept alongside so diagnostics are replayable.
struct Instance {
  MatrixXd X;
  VectorXd y;
  double sigma = 1.0;
  PriorSpec prior;
  std::optional<VectorXd> theta_star;
  std::optional<VectorXd> xi;
  std::uint64_t seed = 0;

  int n() const { return static_cast<int>(X.rows()); }
  int d() const { return static_cast<int>(X.cols()); }

  /// Checks dimensions, prior validity, and (when theta_star and xi are both
  /// present) that y reassembles to 1e-10 relative accuracy.
  void validate() const;
};

struct RipReport {
  int s = 0;               // sparsity level tested
  double eps_hat = 0.0;    // max over tested subsets of max(lmax-1, 1-lmin)
  std::uint64_t subsets_tested = 0;
  bool exhaustive = false;
};

/// Entries i.i.d. N(0, 1/n); pure function of the seed.
MatrixXd gen_gaussian_matrix(int n, int d, std::uint64_t seed);

/// Entries i.i.d. uniform on {-1/sqrt(n), +1/sqrt(n)}.
MatrixXd gen_rademacher_matrix(int n, int d, std::uint64_t seed);

/// Draws theta* from the spike-and-slab prior, xi ~ N(0, sigma^2 I), and
/// assembles y. All randomness comes from `seed`.
Instance draw_instance(const PriorSpec& prior, const MatrixXd& X, double sigma,
                       std::uint64_t seed);

/// Certifies the restricted isometry constant at level s. Exhaustive when
/// C(d,s) <= exhaustive_limit; otherwise samples exhaustive_limit random
/// subsets and reports a lower bound flagged non-exhaustive.
RipReport verify_rip(const MatrixXd& X, int s, std::uint64_t exhaustive_limit,
                     std::uint64_t sample_seed = 0x5eed);

/// alpha = sqrt(2 s eps / (1 - eps)); the mutual-incoherence level implied
/// by (eps, s+1)-RIP.
double rip_to_mi_bound(double eps, int s);

/// sigma (1+eps) sqrt(2 ln(d/delta)): high-probability bound on ||X^T xi||_inf.
double noise_colip_bound(double sigma, double eps, int d, double delta);

}  // namespace spikeslab
