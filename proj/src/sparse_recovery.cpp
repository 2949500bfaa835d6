// Copyright 2026 The spikeslab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License is
// distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and limitations under the License.

#include "spikeslab/sparse_recovery.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <numeric>
#include <vector>

#include "spikeslab/errors.hpp"
#include "spikeslab/math.hpp"

namespace spikeslab {

void RecoveryConfig::validate() const {
  if (c2 < 1.0) throw std::invalid_argument("RecoveryConfig: c2 must be >= 1");
  if (m < 0) throw std::invalid_argument("RecoveryConfig: m must be >= 0");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("RecoveryConfig: delta must be in (0,1)");
  if (k < 0) throw std::invalid_argument("RecoveryConfig: k must be >= 0");
}

VectorXd solve_lasso(const LassoProblem& problem, int max_sweeps) {
  const MatrixXd& X = problem.X;
  const VectorXd& y = problem.y;
  const double lambda = problem.lambda;
  if (!(lambda >= 0.0)) throw std::invalid_argument("solve_lasso: lambda must be >= 0");
  if (!(problem.tol_l2 > 0.0)) throw std::invalid_argument("solve_lasso: tol_l2 must be > 0");
  const int d = static_cast<int>(X.cols());

  // Map the l2 contract to a duality-gap threshold. Strong convexity of the
  // quadratic part in X*theta gives ||X(theta - opt)||^2 <= 2 gap, and the
  // smallest positive singular value converts that to coefficient space.
  // Singular values come from the smaller Gram matrix.
  const MatrixXd gram_small = (X.rows() <= X.cols()) ? MatrixXd(X * X.transpose())
                                                     : MatrixXd(X.transpose() * X);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(gram_small, Eigen::EigenvaluesOnly);
  const double ev_max = eig.eigenvalues().maxCoeff();
  double smin = 0.0;
  for (int i = 0; i < eig.eigenvalues().size(); ++i) {
    const double ev = eig.eigenvalues()[i];
    if (ev > ev_max * 1e-24) {
      smin = std::sqrt(ev);
      break;
    }
  }
  if (smin == 0.0) throw NumericalError("solve_lasso: X is numerically zero");
  const double gap_tol =
      std::max(0.5 * (smin * problem.tol_l2) * (smin * problem.tol_l2), 1e-300);

  const VectorXd col_sq = X.colwise().squaredNorm();
  VectorXd theta = VectorXd::Zero(d);
  VectorXd resid = y;  // y - X theta

  double gap = std::numeric_limits<double>::infinity();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    for (int j = 0; j < d; ++j) {
      if (col_sq[j] == 0.0) continue;
      const double old = theta[j];
      const double c = X.col(j).dot(resid) + col_sq[j] * old;
      const double next = soft_threshold(c, lambda) / col_sq[j];
      if (next != old) {
        resid -= X.col(j) * (next - old);
        theta[j] = next;
      }
    }
    // Duality gap every few sweeps; the dual point is the scaled residual.
    if (sweep % 4 == 3 || sweep == 0) {
      const VectorXd corr = X.transpose() * resid;
      const double scale = (lambda > 0.0 && corr.cwiseAbs().maxCoeff() > lambda)
                               ? lambda / corr.cwiseAbs().maxCoeff()
                               : 1.0;
      const VectorXd u = resid * scale;
      const double primal = 0.5 * resid.squaredNorm() + lambda * theta.lpNorm<1>();
      const double dual = -0.5 * u.squaredNorm() + y.dot(u);
      gap = primal - dual;
      if (gap <= gap_tol) return theta;
    }
  }
  throw ConvergenceError("solve_lasso: duality gap " + std::to_string(gap) +
                         " above tolerance " + std::to_string(gap_tol) + " after " +
                         std::to_string(max_sweeps) + " sweeps");
}

namespace {

double measured_or_configured_eps(const MatrixXd& X, const RecoveryConfig& config) {
  if (std::isfinite(config.eps_override)) return config.eps_override;
  const int d = static_cast<int>(X.cols());
  // Largest level s <= k+1 that is still exhaustively enumerable.
  int s = std::min(config.k + 1, d);
  while (s > 1 && binomial_capped(d, s, config.rip_subset_budget) > config.rip_subset_budget)
    --s;
  return verify_rip(X, s, config.rip_subset_budget).eps_hat;
}

}  // namespace

VectorXd estimate_linf(const MatrixXd& X, const VectorXd& y, double sigma, double delta,
                       const RecoveryConfig& config) {
  config.validate();
  const int d = static_cast<int>(X.cols());
  const double eps = measured_or_configured_eps(X, config);
  if (eps >= 1.0)
    throw ContractViolation("estimate_linf: measured RIP constant " + std::to_string(eps) +
                            " >= 1");
  const double alpha = rip_to_mi_bound(eps, config.k);
  if (alpha >= 1.0)
    throw ContractViolation(
        "estimate_linf: precondition violation, mutual-incoherence bound alpha = " +
        std::to_string(alpha) + " >= 1 (RIP too weak at this sparsity)");

  const double r_inf = noise_colip_bound(sigma, eps, d, delta);
  const double lambda = 2.0 * (1.0 + alpha) / (1.0 - alpha) * r_inf;

  LassoProblem problem;
  problem.X = X;
  problem.y = y;
  problem.lambda = lambda;
  problem.tol_l2 = std::max(r_inf / 10.0, 1e-12 * std::max(1.0, y.norm()));
  return solve_lasso(problem, config.max_sweeps);
}

namespace {

void hard_threshold_top_s(VectorXd& v, int s) {
  const int d = static_cast<int>(v.size());
  if (s >= d) return;
  if (s == 0) {
    v.setZero();
    return;
  }
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::nth_element(order.begin(), order.begin() + s, order.end(), [&](int a, int b) {
    const double fa = std::fabs(v[a]), fb = std::fabs(v[b]);
    return fa != fb ? fa > fb : a < b;  // deterministic tie break
  });
  VectorXd out = VectorXd::Zero(d);
  for (int i = 0; i < s; ++i) out[order[i]] = v[order[i]];
  v = out;
}

}  // namespace

VectorXd estimate_l2_iht(const MatrixXd& X, const VectorXd& y, int s,
                         const RecoveryConfig& config) {
  config.validate();
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  if (s < 0 || s > d) throw std::invalid_argument("estimate_l2_iht: need 0 <= s <= d");
  if (s == 0) return VectorXd::Zero(d);
  const int m = config.m > 0 ? config.m : n;
  if (m > n) throw std::invalid_argument("estimate_l2_iht: m > n");

  const auto Xm = X.topRows(m);
  const auto ym = y.head(m);
  const double step = static_cast<double>(n) / static_cast<double>(m);

  // Iteration count log2(R2 / r2): R2 bounds ||theta*||_2 (Gaussian slab
  // concentration at sparsity s), r2 is the noise floor ||xi_[m]||_2.
  const double t = std::log(1.0 / config.delta);
  const double R2 = 2.0 * std::sqrt(s + t + 1.0);
  const double r2 =
      std::max(config.sigma * std::sqrt(m + 2.0 * std::sqrt(m * t) + 2.0 * t), 1e-9 * R2);
  const int iters = std::clamp(
      static_cast<int>(std::ceil(std::log2(std::max(R2 / r2, 2.0)))), 1, 200);

  VectorXd theta = VectorXd::Zero(d);
  for (int it = 0; it < iters; ++it) {
    VectorXd grad = Xm.transpose() * (ym - Xm * theta);
    theta += step * grad;
    hard_threshold_top_s(theta, s);
  }
  return theta;
}

VectorXd clip(const VectorXd& v, double alpha) {
  if (alpha < 0.0) throw std::domain_error("clip: alpha must be >= 0");
  VectorXd out = v;
  for (int i = 0; i < out.size(); ++i)
    if (!(std::fabs(out[i]) > alpha)) out[i] = 0.0;
  return out;
}

double estimator_radius(const RecoveryConfig& config, int d, int k_star, double eps,
                        double delta) {
  (void)k_star;
  if (config.kind == EstimatorKind::LInf) {
    double mult = config.c_inf;
    if (mult <= 0.0) {
      // Worst-case chain: lasso error <= M_inf (||X^T xi||_inf + lambda)
      // with M_inf = 1/(1-eps) + 2 sqrt(k eps)/(1-eps^2) and
      // lambda = 2(1+alpha)/(1-alpha) ||X^T xi||_inf.
      const double alpha = rip_to_mi_bound(std::min(eps, 0.999), config.k);
      if (alpha >= 1.0)
        throw ContractViolation(
            "estimator_radius: alpha >= 1, configure c_inf explicitly");
      const double m_inf =
          1.0 / (1.0 - eps) + 2.0 * std::sqrt(config.k * eps) / (1.0 - eps * eps);
      mult = m_inf * (1.0 + 2.0 * (1.0 + alpha) / (1.0 - alpha));
    }
    return mult * (1.0 + eps) * std::sqrt(2.0 * std::log(d / delta));
  }
  // l2 path: the IHT guarantee ||theta' - theta*||_2 <= C2 r2 also caps the
  // coordinatewise error, so the radius is C2 sqrt(m + ...) without sigma.
  const int m = config.m > 0 ? config.m : d;
  const double t = std::log(1.0 / delta);
  return config.c2 * std::sqrt(m + 2.0 * std::sqrt(static_cast<double>(m) * t) + 2.0 * t);
}

HintEstimate build_hint(const Instance& instance, int k_star, double eps, double delta,
                        const RecoveryConfig& config) {
  config.validate();
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("build_hint: delta must be in (0,1)");
  const int d = instance.d();
  const double delta_est = delta * delta / 5.0;

  RecoveryConfig cfg = config;
  cfg.sigma = instance.sigma;
  if (cfg.k <= 0) cfg.k = std::max(1, static_cast<int>(std::ceil(instance.prior.expected_sparsity())));

  VectorXd theta_prime;
  if (cfg.kind == EstimatorKind::LInf) {
    theta_prime = estimate_linf(instance.X, instance.y, instance.sigma, delta_est, cfg);
  } else {
    theta_prime = estimate_l2_iht(instance.X, instance.y, std::min(d, k_star), cfg);
  }

  const double eps_used = std::isfinite(cfg.eps_override) ? cfg.eps_override : eps;
  const double radius = estimator_radius(cfg, d, k_star, eps_used, delta_est);
  const double clip_level = 3.0 * instance.sigma * radius;

  HintEstimate hint;
  hint.theta_hat = clip(theta_prime, clip_level);
  if (cfg.refit) {
    // Least-squares refit on the surviving support, then re-clip. This
    // removes the estimator's shrinkage bias, so the recentering residual
    // y - X theta_hat is orthogonal to the hinted columns.
    std::vector<int> surv;
    for (int i = 0; i < d; ++i)
      if (hint.theta_hat[i] != 0.0) surv.push_back(i);
    const int m = static_cast<int>(surv.size());
    if (m > 0 && m < instance.n()) {
      MatrixXd cols(instance.n(), m);
      for (int j = 0; j < m; ++j) cols.col(j) = instance.X.col(surv[j]);
      const VectorXd fit = cols.colPivHouseholderQr().solve(instance.y);
      VectorXd refit = VectorXd::Zero(d);
      for (int j = 0; j < m; ++j) refit[surv[j]] = fit[j];
      hint.theta_hat = clip(refit, clip_level);
    }
  }
  std::vector<int> support;
  for (int i = 0; i < d; ++i)
    if (hint.theta_hat[i] != 0.0) support.push_back(i);
  hint.support = SupportSet(std::move(support));
  hint.clip_level = clip_level;
  hint.kind = cfg.kind;
  return hint;
}

}  // namespace spikeslab
