// Copyright 2026 The spikeslab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License is
// distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and limitations under the License.

#include "spikeslab/oracle.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <vector>

#include "spikeslab/errors.hpp"
#include "spikeslab/laplace_posterior.hpp"
#include "spikeslab/math.hpp"

namespace spikeslab {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

double SupportPmf::tv_uncertainty() const {
  double total = 0.0;
  for (const auto& [s, p] : entries) {
    auto it = rel_stderr.find(s);
    if (it != rel_stderr.end()) total += p * it->second;
  }
  return total;
}

void SupportPmf::validate() const {
  double total = 0.0;
  for (const auto& [s, p] : entries) {
    if (p < 0.0) throw std::logic_error("SupportPmf: negative probability");
    total += p;
  }
  if (std::fabs(total - 1.0) > 1e-9)
    throw std::logic_error("SupportPmf: probabilities sum to " + std::to_string(total));
}

SupportSet SupportPmf::sample(RngStream& rng) const {
  const double u = rng.uniform();
  double acc = 0.0;
  for (const auto& [s, p] : entries) {
    acc += p;
    if (u <= acc) return s;
  }
  return entries.rbegin()->first;
}

SupportPmf enumerate_posterior_gaussian(const Instance& instance) {
  instance.validate();
  const int d = instance.d();
  if (d > 24)
    throw std::invalid_argument("enumerate_posterior_gaussian: refusing d = " +
                                std::to_string(d) + " > 24 (2^d subsets)");
  if (!(instance.sigma > 0.0))
    throw std::domain_error("enumerate_posterior_gaussian: sigma must be > 0");

  const double inv_s2 = 1.0 / (instance.sigma * instance.sigma);
  const MatrixXd gram = instance.X.transpose() * instance.X;
  const VectorXd xty = instance.X.transpose() * instance.y;
  const VectorXd& q = instance.prior.q;

  // Prior log factors; +/- infinities encode q_i = 0 / 1 coordinates.
  VectorXd log_q(d), log_1mq(d);
  for (int i = 0; i < d; ++i) {
    log_q[i] = q[i] > 0.0 ? std::log(q[i]) : kNegInf;
    log_1mq[i] = q[i] < 1.0 ? std::log1p(-q[i]) : kNegInf;
  }

  const std::uint64_t count = 1ull << d;
  std::vector<double> logw(count);
  std::vector<int> idx;
  idx.reserve(d);
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    double lw = 0.0;
    idx.clear();
    for (int i = 0; i < d; ++i) {
      if (mask & (1ull << i)) {
        lw += log_q[i];
        idx.push_back(i);
      } else {
        lw += log_1mq[i];
      }
    }
    if (lw == kNegInf) {
      logw[mask] = kNegInf;
      continue;
    }
    const int m = static_cast<int>(idx.size());
    if (m > 0) {
      MatrixXd a(m, m);
      VectorXd bs(m);
      for (int r = 0; r < m; ++r) {
        bs[r] = inv_s2 * xty[idx[r]];
        for (int c = 0; c < m; ++c) a(r, c) = inv_s2 * gram(idx[r], idx[c]);
      }
      a.diagonal().array() += 1.0;
      Eigen::LLT<MatrixXd> llt(a);
      if (llt.info() != Eigen::Success)
        throw NumericalError("enumerate_posterior_gaussian: Cholesky failed");
      const VectorXd half = llt.matrixL().solve(bs);
      double logdet = 0.0;
      for (int i = 0; i < m; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
      lw += 0.5 * half.squaredNorm() - 0.5 * logdet;
    }
    logw[mask] = lw;
  }

  const double logz = logsumexp(std::span<const double>(logw));
  SupportPmf pmf;
  pmf.domain_d = d;
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    if (logw[mask] == kNegInf) continue;
    pmf.entries[SupportSet::from_mask(static_cast<std::uint32_t>(mask))] =
        std::exp(logw[mask] - logz);
  }
  return pmf;
}

namespace {

// log of Int exp(-0.5 x' A x + b' x - ||x||_1) dx by tensor-grid Simpson,
// with each axis split at the l1 kink.
double log_z_quadrature(const MatrixXd& a, const VectorXd& b, int pts_per_seg) {
  const int k = static_cast<int>(a.rows());
  if (k == 0) return 0.0;
  const VectorXd mode = l1_quadratic_mode(a, b);
  const MatrixXd cov = a.inverse();

  // Per-axis grids: [lo, 0] and [0, hi] segments, Simpson weights.
  std::vector<std::vector<double>> grid(k), weight(k);
  for (int j = 0; j < k; ++j) {
    const double sd = std::sqrt(cov(j, j));
    const double lo = std::min(mode[j] - 12.0 * sd, -2.0 * sd);
    const double hi = std::max(mode[j] + 12.0 * sd, 2.0 * sd);
    auto add_segment = [&](double from, double to) {
      const int n = pts_per_seg | 1;  // odd
      const double h = (to - from) / (n - 1);
      if (h <= 0.0) return;
      for (int i = 0; i < n; ++i) {
        grid[j].push_back(from + i * h);
        double w = (i == 0 || i == n - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        weight[j].push_back(w * h / 3.0);
      }
    };
    add_segment(lo, 0.0);
    add_segment(0.0, hi);
  }

  double g_star = -0.5 * mode.dot(a * mode) + b.dot(mode) - mode.lpNorm<1>();
  long double total = 0.0L;
  std::vector<size_t> ix(k, 0);
  VectorXd x(k);
  for (;;) {
    double wprod = 1.0;
    for (int j = 0; j < k; ++j) {
      x[j] = grid[j][ix[j]];
      wprod *= weight[j][ix[j]];
    }
    const double g = -0.5 * x.dot(a * x) + b.dot(x) - x.lpNorm<1>();
    total += static_cast<long double>(wprod * std::exp(g - g_star));
    int j = 0;
    while (j < k && ++ix[j] == grid[j].size()) ix[j++] = 0;
    if (j == k) break;
  }
  return g_star + std::log(static_cast<double>(total));
}

// Same integral by importance sampling from N(mode, A^{-1}). The KKT
// condition ||b - A mode||_inf <= 1 keeps the weights bounded above.
double log_z_importance(const MatrixXd& a, const VectorXd& b, std::uint64_t n,
                        RngStream& rng, double* rel_se, double ess_floor,
                        const std::string& label) {
  const int k = static_cast<int>(a.rows());
  if (k == 0) {
    if (rel_se) *rel_se = 0.0;
    return 0.0;
  }
  const VectorXd mode = l1_quadratic_mode(a, b);
  Eigen::LLT<MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw NumericalError("log_z_importance: Cholesky failed on " + label);
  double logdet = 0.0;
  for (int i = 0; i < k; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  const VectorXd tilt = b - a * mode;
  const double shift = 0.5 * mode.dot(a * mode);

  std::vector<double> logw(n);
  VectorXd g(k), x(k);
  for (std::uint64_t t = 0; t < n; ++t) {
    for (int i = 0; i < k; ++i) g[i] = rng.normal();
    x = mode + llt.matrixL().transpose().solve(g);
    logw[t] = tilt.dot(x) - x.lpNorm<1>() + shift;
  }
  const double lse = logsumexp(std::span<const double>(logw));
  std::vector<double> twice(n);
  for (std::uint64_t t = 0; t < n; ++t) twice[t] = 2.0 * logw[t];
  const double ess = std::exp(2.0 * lse - logsumexp(std::span<const double>(twice)));
  if (ess < ess_floor)
    throw NumericalError("log_z_importance: effective sample size " + std::to_string(ess) +
                         " below guard on " + label);
  if (rel_se) *rel_se = std::sqrt(std::max(0.0, (n / ess - 1.0) / n));
  return 0.5 * k * kLn2Pi - 0.5 * logdet + lse - std::log(static_cast<double>(n));
}

}  // namespace

SupportPmf enumerate_posterior_laplace(const Instance& instance, std::uint64_t mc_samples,
                                       RngStream& rng, int quad_dim_limit,
                                       double ess_floor) {
  instance.validate();
  const int d = instance.d();
  if (d > 12)
    throw std::invalid_argument("enumerate_posterior_laplace: refusing d = " +
                                std::to_string(d) + " > 12");
  if (!(instance.sigma > 0.0))
    throw std::domain_error("enumerate_posterior_laplace: sigma must be > 0");
  if (mc_samples < 10) throw std::invalid_argument("enumerate_posterior_laplace: too few samples");

  const double inv_s2 = 1.0 / (instance.sigma * instance.sigma);
  const MatrixXd gram = instance.X.transpose() * instance.X;
  const VectorXd xty = instance.X.transpose() * instance.y;
  const VectorXd& q = instance.prior.q;

  VectorXd log_q(d), log_1mq(d);
  for (int i = 0; i < d; ++i) {
    log_q[i] = q[i] > 0.0 ? std::log(q[i]) : kNegInf;
    log_1mq[i] = q[i] < 1.0 ? std::log1p(-q[i]) : kNegInf;
  }

  const std::uint32_t count = 1u << d;
  std::vector<double> logw(count, kNegInf);
  std::vector<double> relse(count, 0.0);
  for (std::uint32_t mask = 0; mask < count; ++mask) {
    double lw = 0.0;
    std::vector<int> idx;
    for (int i = 0; i < d; ++i) {
      if (mask & (1u << i)) {
        lw += log_q[i];
        idx.push_back(i);
      } else {
        lw += log_1mq[i];
      }
    }
    if (lw == kNegInf) continue;
    const int m = static_cast<int>(idx.size());
    if (m > 0) {
      MatrixXd a(m, m);
      VectorXd bs(m);
      for (int r = 0; r < m; ++r) {
        bs[r] = inv_s2 * xty[idx[r]];
        for (int c = 0; c < m; ++c) a(r, c) = inv_s2 * gram(idx[r], idx[c]);
      }
      lw += -0.5 * m * kLn2Pi;
      if (m <= quad_dim_limit) {
        lw += log_z_quadrature(a, bs, m <= 2 ? 161 : (m == 3 ? 81 : 41));
      } else {
        RngStream sub = rng.child(mask);
        double se = 0.0;
        lw += log_z_importance(a, bs, mc_samples, sub, &se, ess_floor,
                               "S = {" + SupportSet::from_mask(mask).key() + "}");
        relse[mask] = se;
      }
    }
    logw[mask] = lw;
  }

  const double logz = logsumexp(std::span<const double>(logw));
  SupportPmf pmf;
  pmf.domain_d = d;
  for (std::uint32_t mask = 0; mask < count; ++mask) {
    if (logw[mask] == kNegInf) continue;
    const SupportSet s = SupportSet::from_mask(mask);
    pmf.entries[s] = std::exp(logw[mask] - logz);
    if (relse[mask] > 0.0) pmf.rel_stderr[s] = relse[mask];
  }
  return pmf;
}

double tv_distance(const SupportPmf& p, const SupportPmf& q) {
  if (p.domain_d != q.domain_d)
    throw std::invalid_argument("tv_distance: dimension mismatch (" +
                                std::to_string(p.domain_d) + " vs " +
                                std::to_string(q.domain_d) + ")");
  double total = 0.0;
  auto it = p.entries.begin();
  auto jt = q.entries.begin();
  while (it != p.entries.end() || jt != q.entries.end()) {
    if (jt == q.entries.end() || (it != p.entries.end() && it->first < jt->first)) {
      total += it->second;
      ++it;
    } else if (it == p.entries.end() || jt->first < it->first) {
      total += jt->second;
      ++jt;
    } else {
      total += std::fabs(it->second - jt->second);
      ++it;
      ++jt;
    }
  }
  return 0.5 * total;
}

SupportPmf empirical_support_pmf(const std::vector<SupportSet>& samples, int d) {
  if (samples.empty()) throw std::invalid_argument("empirical_support_pmf: empty sample list");
  SupportPmf pmf;
  pmf.domain_d = d;
  const double w = 1.0 / static_cast<double>(samples.size());
  for (const SupportSet& s : samples) pmf.entries[s] += w;
  return pmf;
}

}  // namespace spikeslab
