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
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>

#include "spikeslab/errors.hpp"
#include "spikeslab/math.hpp"
#include "spikeslab/rng.hpp"
#include "spikeslab/support_set.hpp"

namespace spikeslab {

using Eigen::VectorXd;

/// Dynamic-programming table for conditional Poisson sampling: F(i, j) is the
/// total weight prod_{l in S} p_l/(1-p_l) over subsets S of {i..d} with
/// |S| = j. Weights span hundreds of orders of magnitude once inclusion
/// probabilities come from exponentiated scores, so the table switches to a
/// log-sum-exp recurrence unless all odds ratios stay small.
class DpTable {
 public:
  /// Builds from Bernoulli probabilities; every p_i must lie in [0, 1).
  static DpTable build(const VectorXd& p, int k);

  /// Builds directly from ln(p_i / (1 - p_i)); entries may be -inf (p_i = 0)
  /// or arbitrarily large finite values, which keeps upstream callers out of
  /// the p -> 1 rounding trap.
  static DpTable build_from_log_odds(const VectorXd& log_odds, int k);

  int d() const { return static_cast<int>(log_odds_.size()); }
  int k() const { return k_; }
  bool log_domain() const { return log_mode_; }
  const VectorXd& p() const { return p_; }

  /// F(i, j), 1-based in i with i in [1, d+1], j in [0, k].
  double value(int i, int j) const { return log_mode_ ? std::exp(F_(i - 1, j)) : F_(i - 1, j); }
  double log_value(int i, int j) const {
    return log_mode_ ? F_(i - 1, j) : std::log(F_(i - 1, j));
  }

  /// Exact draw from the Bernoulli product law conditioned on |S| <= k.
  SupportSet sample(RngStream& rng) const;

  /// Exact conditional probability of S; zero when |S| > k.
  double pmf(const SupportSet& s) const;
  double log_pmf(const SupportSet& s) const;

 private:
  DpTable() = default;
  void fill();

  VectorXd log_odds_;
  VectorXd p_;  // empty when constructed from log odds with no finite p available
  int k_ = 0;
  bool log_mode_ = false;
  Eigen::MatrixXd F_;  // (d+1) x (k+1); linear or log values per log_mode_
};

enum class RatioPolicy {
  kError,  // observed ratio outside [1/C, C] raises ContractViolation
  kClamp,  // record the excursion, clamp the acceptance probability
};

/// Approximate rejection sampling from an unnormalized target P given a
/// proposal with unnormalized density Q and a certified two-sided ratio
/// bound C: a proposal omega is accepted with probability
/// exp(log P - log Q - 2 ln C). On first acceptance the output law is exactly
/// proportional to P over the proposal's support; the attempt cap only adds
/// the total-variation budget delta.
template <class Omega>
struct RejectionSpec {
  std::function<double(const Omega&)> log_P;
  std::function<double(const Omega&)> log_Q;
  double C = 1.0;
  double delta = 1e-3;
  std::uint64_t max_attempts = 0;  // 0 = derive from (C, delta), see below
  RatioPolicy policy = RatioPolicy::kError;
  std::function<std::string(const Omega&)> describe;  // optional, for errors

  std::uint64_t attempt_cap() const {
    if (max_attempts != 0) return max_attempts;
    // ceil(C^3 ln(2/delta)): with acceptance probability (P/Q)/C^2 the
    // worst admissible proposal accepts at rate 1/C^3 per attempt, so this
    // cap drives the residual non-acceptance mass below delta.
    const double c3 = C * C * C;
    return static_cast<std::uint64_t>(std::ceil(c3 * std::log(2.0 / delta))) + 1;
  }
};

struct RejectionStats {
  std::uint64_t attempts = 0;
  bool accepted = false;
  bool budget_exceeded = false;
  double log_ratio_min = std::numeric_limits<double>::infinity();
  double log_ratio_max = -std::numeric_limits<double>::infinity();
};

template <class Omega, class BaseSampler>
Omega rejection_sample(const RejectionSpec<Omega>& spec, BaseSampler&& base,
                       RngStream& rng, RejectionStats* stats = nullptr) {
  if (spec.C < 1.0) throw std::domain_error("rejection_sample: C must be >= 1");
  if (!(spec.delta > 0.0 && spec.delta < 1.0))
    throw std::domain_error("rejection_sample: delta must be in (0,1)");

  const double log_c = std::log(spec.C);
  // Slack absorbs harmless floating-point wobble at the envelope edge.
  const double slack = 1e-9 * std::max(1.0, log_c) + 1e-12;
  const std::uint64_t cap = spec.attempt_cap();

  RejectionStats local;
  Omega omega{};
  for (std::uint64_t attempt = 0; attempt < cap; ++attempt) {
    omega = base(rng);
    ++local.attempts;
    const double log_ratio = spec.log_P(omega) - spec.log_Q(omega);
    local.log_ratio_min = std::min(local.log_ratio_min, log_ratio);
    local.log_ratio_max = std::max(local.log_ratio_max, log_ratio);
    if (std::fabs(log_ratio) > log_c + slack && spec.policy == RatioPolicy::kError) {
      std::string where = spec.describe ? spec.describe(omega) : std::string("<proposal>");
      if (stats) *stats = local;
      throw ContractViolation("rejection_sample: P/Q ratio " +
                              std::to_string(std::exp(log_ratio)) + " at " + where +
                              " outside [1/C, C] with C = " + std::to_string(spec.C));
    }
    if (std::log(rng.uniform()) < log_ratio - 2.0 * log_c) {
      local.accepted = true;
      if (stats) *stats = local;
      return omega;
    }
  }
  // Budget exhausted: emit the final proposal. The TV accounting already
  // charges this event to delta.
  local.budget_exceeded = true;
  if (stats) *stats = local;
  return omega;
}

}  // namespace spikeslab
