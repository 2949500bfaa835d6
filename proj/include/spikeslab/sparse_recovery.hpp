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
#include <limits>

#include "spikeslab/model.hpp"
#include "spikeslab/support_set.hpp"

namespace spikeslab {

/// Lagrangian Lasso: minimize (1/2)||X theta - y||^2 + lambda ||theta||_1,
/// solved to a target l2 distance from the (assumed unique) minimizer.
struct LassoProblem {
  MatrixXd X;
  VectorXd y;
  double lambda = 1.0;
  double tol_l2 = 1e-8;
};

enum class EstimatorKind { LInf, L2Iht };

struct HintEstimate {
  VectorXd theta_hat;
  SupportSet support;
  double clip_level = 0.0;
  EstimatorKind kind = EstimatorKind::LInf;
};

/// Knobs shared by the recovery estimators. The error-bound multipliers are
/// config values validated empirically; when c_inf is left unset it is
/// derived at runtime from the RIP constant via the mutual-incoherence
/// chain (worst-case, so typically loose at desk scale).
struct RecoveryConfig {
  EstimatorKind kind = EstimatorKind::LInf;
  double sigma = 0.0;       // noise level used for radii
  int k = 1;                // assumed sparsity (sets the MI level k+1)
  double c_inf = 0.0;       // 0 = derive from the RIP constant at runtime
  double c2 = 3.0;          // IHT support multiplier / l2 radius multiplier
  int m = 0;                // row-prefix count for the l2 path; 0 = all rows
  double delta = 0.05;      // failure probability budget
  double eps_override = std::numeric_limits<double>::quiet_NaN();  // NaN = measure
  std::uint64_t rip_subset_budget = 2000;
  int max_sweeps = 200000;  // lasso coordinate-descent cap
  /// Replace the surviving coordinates' values with their least-squares refit
  /// before the final clip. Removes the regularization bias, so the
  /// recentered residual is orthogonal to the hinted columns.
  bool refit = true;

  void validate() const;
};

/// Coordinate descent with a duality-gap stopping rule. The gap certifies
/// ||X(theta - theta_hat)||^2 <= 2 gap; dividing by the smallest positive
/// singular value of X converts that into the l2 distance contract.
VectorXd solve_lasso(const LassoProblem& problem, int max_sweeps = 200000);

/// Lasso at the regularization level lambda = 2(1+alpha)/(1-alpha) r_inf,
/// where r_inf bounds ||X^T xi||_inf and alpha comes from RIP-implies-MI.
VectorXd estimate_linf(const MatrixXd& X, const VectorXd& y, double sigma, double delta,
                       const RecoveryConfig& config);

/// Iterative hard thresholding on the m-row prefix of X.
VectorXd estimate_l2_iht(const MatrixXd& X, const VectorXd& y, int s,
                         const RecoveryConfig& config);

/// Zeroes every entry with |v_i| <= alpha (strict keep on |v_i| > alpha).
VectorXd clip(const VectorXd& v, double alpha);

/// The l-infinity radius sigma * R_A(k_star, eps, delta) of the configured
/// estimator, without the sigma factor.
double estimator_radius(const RecoveryConfig& config, int d, int k_star, double eps,
                        double delta);

/// Runs the configured estimator and clips at 3 sigma R_A(k_star, eps,
/// delta^2/5), so that surviving coordinates are contained in posterior
/// supports with probability >= 1 - delta.
HintEstimate build_hint(const Instance& instance, int k_star, double eps, double delta,
                        const RecoveryConfig& config);

}  // namespace spikeslab
