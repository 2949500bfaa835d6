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
#include <limits>
#include <memory>
#include <utility>

#include "spikeslab/model.hpp"
#include "spikeslab/report.hpp"
#include "spikeslab/sparse_recovery.hpp"
#include "spikeslab/subset_sampling.hpp"
#include "spikeslab/support_set.hpp"

namespace spikeslab {

/// Observations recentered around a hint vector: z = (1/sigma^2) X^T (y -
/// X theta_hat) - theta_hat. Support-density ratios over sets containing
/// supp(theta_hat) only depend on z, which is far more uniform in scale
/// than X^T y itself.
struct RecenteredState {
  const Instance* instance = nullptr;
  VectorXd z;
  VectorXd theta_hat;
  SupportSet T;  // supp(theta_hat)
  double sigma = 0.0;
  std::shared_ptr<const MatrixXd> gram;  // optional X^T X cache

  const MatrixXd& X() const { return instance->X; }
  const VectorXd& y() const { return instance->y; }
  const VectorXd& q() const { return instance->prior.q; }
  int d() const { return instance->d(); }

  /// [X^T X]_{S x S} / sigma^2 + I, the posterior precision on S.
  MatrixXd precision_on(const SupportSet& s) const;
};

struct SamplerConfig {
  int k_star = 0;       // 0 = min(d, ceil(16 (k + ln(40/delta))))
  double eps = std::numeric_limits<double>::quiet_NaN();  // assumed RIP constant
  double delta = 0.01;  // total-variation budget
  double ratio_cap = 0.0;  // 0 = path default (3 Gaussian, 4 Laplace)
  RatioPolicy ratio_policy = RatioPolicy::kError;
  /// Rescale the target so its density ratio is 1 at the proposal's modal
  /// set. A constant rescaling of an unnormalized density does not change
  /// the sampled law, but it re-centers the ratio envelope the cap C has to
  /// cover, which is what makes desk-scale RIP constants workable.
  bool renormalize_at_mode = true;
  bool use_gram_cache = true;  // honored while d <= 2000
  /// Check every evaluated ratio against the analytic envelope (requires a
  /// finite eps). On by default in debug builds.
#ifdef NDEBUG
  bool audit_ratio_envelope = false;
#else
  bool audit_ratio_envelope = true;
#endif
  std::uint64_t max_attempts = 0;  // 0 = derived from (C, delta)

  int effective_k_star(int d, double k) const;
  double effective_ratio_cap(double path_default) const {
    return ratio_cap > 0.0 ? ratio_cap : path_default;
  }
};

/// z computed from the hint; validates sigma > 0.
RecenteredState recenter(const Instance& instance, const HintEstimate& hint);
RecenteredState recenter(const Instance& instance, const VectorXd& theta_hat);

/// log of Q(S): prior odds times the isotropic surrogate weight
/// exp(sigma^2/(2(1+sigma^2)) ||z_S||^2) (sigma^2/(1+sigma^2))^{|S|/2}.
double log_Q_gaussian(const RecenteredState& state, const SupportSet& s);

/// log of P(S): prior odds times exp(||z_S||^2_{A_S^-1}/2) / sqrt(det A_S).
double log_P_gaussian(const RecenteredState& state, const SupportSet& s);

/// The (lo, hi) envelope for P(S)/Q(S) under an (eps, k_star)-RIP design.
std::pair<double, double> ratio_bounds_gaussian(double eps, int k_star, double sigma,
                                                double z_S_sqnorm);

/// Conditional Poisson proposal over supersets of the hint support with
/// |S| <= config.k_star.
SupportSet product_sample_gaussian(const RecenteredState& state, const SamplerConfig& config,
                                   RngStream& rng);

struct SampleResult {
  SupportSet support;
  SamplerReport report;
};

/// Rejection-corrected support sampler (proposal capped at 3/4 k_star).
SampleResult posterior_sample_gaussian(const Instance& instance, const HintEstimate& hint,
                                       const SamplerConfig& config, RngStream& rng);

/// Exact draw of theta given its support: N(mu_S, A_S^{-1}) on S, zero off S.
VectorXd draw_theta_given_support(const Instance& instance, const SupportSet& s,
                                  RngStream& rng);

}  // namespace spikeslab
