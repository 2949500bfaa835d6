// Copyright 2026 The spikeslab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License is
// distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and limitations under the License.

#include "spikeslab/gaussian_posterior.hpp"

#include <Eigen/Cholesky>
#include <chrono>
#include <cmath>
#include <vector>

#include "spikeslab/errors.hpp"
#include "spikeslab/math.hpp"

namespace spikeslab {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

MatrixXd RecenteredState::precision_on(const SupportSet& s) const {
  const int m = s.size();
  const double inv_s2 = 1.0 / (sigma * sigma);
  MatrixXd a(m, m);
  if (gram) {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        a(i, j) = inv_s2 * (*gram)(s.indices()[i], s.indices()[j]);
  } else {
    MatrixXd cols(X().rows(), m);
    for (int j = 0; j < m; ++j) cols.col(j) = X().col(s.indices()[j]);
    a.noalias() = inv_s2 * (cols.transpose() * cols);
  }
  a.diagonal().array() += 1.0;
  return a;
}

int SamplerConfig::effective_k_star(int d, double k) const {
  if (k_star > 0) return std::min(k_star, d);
  const int def = static_cast<int>(std::ceil(16.0 * (k + std::log(40.0 / delta))));
  return std::min(def, d);
}

RecenteredState recenter(const Instance& instance, const VectorXd& theta_hat) {
  if (!(instance.sigma > 0.0))
    throw std::domain_error("recenter: sigma must be > 0 (posterior degenerate)");
  if (theta_hat.size() != instance.d())
    throw std::invalid_argument("recenter: theta_hat dimension mismatch");
  RecenteredState state;
  state.instance = &instance;
  state.sigma = instance.sigma;
  state.theta_hat = theta_hat;
  const double inv_s2 = 1.0 / (instance.sigma * instance.sigma);
  state.z = inv_s2 * (instance.X.transpose() * (instance.y - instance.X * theta_hat)) -
            theta_hat;
  std::vector<int> support;
  for (int i = 0; i < theta_hat.size(); ++i)
    if (theta_hat[i] != 0.0) support.push_back(i);
  state.T = SupportSet(std::move(support));
  return state;
}

RecenteredState recenter(const Instance& instance, const HintEstimate& hint) {
  return recenter(instance, hint.theta_hat);
}

namespace {

double log_prior_odds(const VectorXd& q, const SupportSet& s) {
  double total = 0.0;
  for (int i : s.indices()) {
    if (q[i] >= 1.0)
      throw std::logic_error("log weight: q[" + std::to_string(i + 1) +
                             "] = 1 reached the odds product; forced inclusions must be "
                             "reduced upstream");
    total += (q[i] <= 0.0) ? kNegInf : std::log(q[i]) - std::log1p(-q[i]);
  }
  return total;
}

double z_sqnorm_on(const VectorXd& z, const SupportSet& s) {
  double t = 0.0;
  for (int i : s.indices()) t += z[i] * z[i];
  return t;
}

// Q(S) without the prior-odds product (it cancels in every P/Q ratio).
double log_q_core(const RecenteredState& state, const SupportSet& s) {
  const double s2 = state.sigma * state.sigma;
  const double shrink = s2 / (1.0 + s2);
  return 0.5 * shrink * z_sqnorm_on(state.z, s) + 0.5 * s.size() * std::log(shrink);
}

// P(S) without the prior-odds product.
double log_p_core(const RecenteredState& state, const SupportSet& s) {
  if (s.empty()) return 0.0;
  const MatrixXd a = state.precision_on(s);
  Eigen::LLT<MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw NumericalError("log_P_gaussian: Cholesky failed on S = {" + s.key() + "}");
  VectorXd zs(s.size());
  for (int i = 0; i < s.size(); ++i) zs[i] = state.z[s.indices()[i]];
  const VectorXd half = llt.matrixL().solve(zs);
  double logdet = 0.0;
  for (int i = 0; i < s.size(); ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  return 0.5 * half.squaredNorm() - 0.5 * logdet;
}

}  // namespace

double log_Q_gaussian(const RecenteredState& state, const SupportSet& s) {
  return log_prior_odds(state.q(), s) + log_q_core(state, s);
}

double log_P_gaussian(const RecenteredState& state, const SupportSet& s) {
  return log_prior_odds(state.q(), s) + log_p_core(state, s);
}

std::pair<double, double> ratio_bounds_gaussian(double eps, int k_star, double sigma,
                                                double z_S_sqnorm) {
  if (!(eps >= 0.0 && eps < 0.5))
    throw std::domain_error("ratio_bounds_gaussian: eps must be in [0, 1/2)");
  const double s2 = sigma * sigma;
  const double scale = s2 * eps / ((1.0 + s2) * (1.0 + s2)) * z_S_sqnorm;
  const double lo = std::pow(1.0 / (1.0 + eps), 0.5 * k_star) * std::exp(-scale);
  const double hi = std::pow(1.0 / (1.0 - eps), 0.5 * k_star) * std::exp(scale);
  return {lo, hi};
}

namespace {

struct Proposal {
  SupportSet forced;            // hint support plus q_i = 1 coordinates
  std::vector<int> free_index;  // position -> coordinate
  DpTable table;
};

Proposal make_proposal(const RecenteredState& state, int cap) {
  const VectorXd& q = state.q();
  const int d = state.d();
  const double s2 = state.sigma * state.sigma;
  const double shrink = s2 / (1.0 + s2);

  std::vector<int> forced = state.T.indices();
  for (int i = 0; i < d; ++i)
    if (q[i] >= 1.0 && !state.T.contains(i)) forced.push_back(i);
  SupportSet forced_set(std::move(forced));

  std::vector<int> free_index;
  std::vector<double> log_odds;
  for (int i = 0; i < d; ++i) {
    if (forced_set.contains(i)) continue;
    if (q[i] <= 0.0) continue;  // never selected, drop from the ground set
    // r_i = q_i sqrt(shrink) exp(shrink z_i^2 / 2); p_i = r_i/(1-q_i+r_i),
    // carried as ln(p/(1-p)) = ln r_i - ln(1-q_i) to dodge overflow.
    const double log_r =
        std::log(q[i]) + 0.5 * std::log(shrink) + 0.5 * shrink * state.z[i] * state.z[i];
    free_index.push_back(i);
    log_odds.push_back(log_r - std::log1p(-q[i]));
  }

  const int cap_free = cap - forced_set.size();
  if (cap_free < 0)
    throw std::invalid_argument("product_sample_gaussian: k_star cap " +
                                std::to_string(cap) + " below forced support size " +
                                std::to_string(forced_set.size()));
  Eigen::Map<const VectorXd> lo(log_odds.data(), static_cast<int>(log_odds.size()));
  Proposal prop{std::move(forced_set), std::move(free_index),
                DpTable::build_from_log_odds(lo, std::min<int>(cap_free, lo.size()))};
  return prop;
}

SupportSet draw_from_proposal(const Proposal& prop, RngStream& rng) {
  const SupportSet free_draw = prop.table.sample(rng);
  std::vector<int> chosen;
  chosen.reserve(free_draw.size());
  for (int pos : free_draw.indices()) chosen.push_back(prop.free_index[pos]);
  return prop.forced.united(SupportSet(std::move(chosen)));
}

// The proposal's modal set: forced coordinates plus the highest-odds free
// coordinates with inclusion probability above 1/2, respecting the cap.
SupportSet proposal_mode(const Proposal& prop, int cap) {
  std::vector<std::pair<double, int>> positives;
  const DpTable& t = prop.table;
  for (int pos = 0; pos < static_cast<int>(prop.free_index.size()); ++pos)
    if (t.p()[pos] > 0.5) positives.emplace_back(-t.p()[pos], prop.free_index[pos]);
  std::sort(positives.begin(), positives.end());
  const int room = cap - prop.forced.size();
  std::vector<int> take;
  for (int i = 0; i < std::min<int>(room, positives.size()); ++i)
    take.push_back(positives[i].second);
  return prop.forced.united(SupportSet(std::move(take)));
}

}  // namespace

SupportSet product_sample_gaussian(const RecenteredState& state, const SamplerConfig& config,
                                   RngStream& rng) {
  const int k_star = config.effective_k_star(state.d(), state.q().sum());
  if (k_star < state.T.size())
    throw std::invalid_argument("product_sample_gaussian: k_star < |supp(theta_hat)|");
  const Proposal prop = make_proposal(state, k_star);
  return draw_from_proposal(prop, rng);
}

SampleResult posterior_sample_gaussian(const Instance& instance, const HintEstimate& hint,
                                       const SamplerConfig& config, RngStream& rng) {
  const auto t0 = std::chrono::steady_clock::now();
  RecenteredState state = recenter(instance, hint);
  if (config.use_gram_cache && instance.d() <= 2000)
    state.gram = std::make_shared<const MatrixXd>(instance.X.transpose() * instance.X);

  const int k_star = config.effective_k_star(instance.d(), instance.prior.expected_sparsity());
  const int cap = (3 * k_star) / 4;  // Omega is capped at 3/4 k_star
  const Proposal prop = make_proposal(state, cap);

  const double eps = config.eps;
  const bool audit = config.audit_ratio_envelope && std::isfinite(eps) && eps < 0.5;

  auto raw_log_ratio = [&](const SupportSet& s) {
    const double lr = log_p_core(state, s) - log_q_core(state, s);
    if (audit) {
      const auto [lo, hi] = ratio_bounds_gaussian(eps, k_star, state.sigma,
                                                  z_sqnorm_on(state.z, s));
      const double slack = 1e-9 * (1.0 + std::fabs(std::log(hi)));
      if (lr < std::log(lo) - slack || lr > std::log(hi) + slack)
        throw ContractViolation("ratio audit: P/Q = " + std::to_string(std::exp(lr)) +
                                " outside the RIP envelope on S = {" + s.key() + "}");
    }
    return lr;
  };

  double offset = 0.0;
  if (config.renormalize_at_mode) {
    // P and Q are unnormalized, so P may be rescaled by any constant without
    // changing the sampled law; anchoring the ratio at the proposal mode
    // centers the envelope the cap has to cover.
    offset = raw_log_ratio(proposal_mode(prop, cap));
  }

  RejectionSpec<SupportSet> spec;
  spec.log_P = [&](const SupportSet& s) { return raw_log_ratio(s) - offset; };
  spec.log_Q = [](const SupportSet&) { return 0.0; };
  spec.C = config.effective_ratio_cap(3.0);
  spec.delta = config.delta / 2.0;
  spec.max_attempts = config.max_attempts;
  spec.policy = config.ratio_policy;
  spec.describe = [](const SupportSet& s) { return "S = {" + s.key() + "}"; };

  RejectionStats stats;
  SampleResult result;
  result.support = rejection_sample<SupportSet>(
      spec, [&](RngStream& r) { return draw_from_proposal(prop, r); }, rng, &stats);

  result.report.attempts = stats.attempts;
  result.report.accepted = stats.accepted ? 1 : 0;
  result.report.budget_exceeded = stats.budget_exceeded;
  result.report.log_ratio_min = stats.log_ratio_min + offset;
  result.report.log_ratio_max = stats.log_ratio_max + offset;
  result.report.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
          .count();
  return result;
}

VectorXd draw_theta_given_support(const Instance& instance, const SupportSet& s,
                                  RngStream& rng) {
  if (!(instance.sigma > 0.0))
    throw std::domain_error("draw_theta_given_support: sigma must be > 0");
  VectorXd theta = VectorXd::Zero(instance.d());
  if (s.empty()) return theta;

  const double inv_s2 = 1.0 / (instance.sigma * instance.sigma);
  const int m = s.size();
  MatrixXd cols(instance.n(), m);
  for (int j = 0; j < m; ++j) cols.col(j) = instance.X.col(s.indices()[j]);
  MatrixXd a = inv_s2 * (cols.transpose() * cols);
  a.diagonal().array() += 1.0;

  Eigen::LLT<MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw NumericalError("draw_theta_given_support: Cholesky failed on S = {" + s.key() +
                         "}");
  const VectorXd b = inv_s2 * (cols.transpose() * instance.y);
  const VectorXd mu = llt.solve(b);

  VectorXd g(m);
  for (int i = 0; i < m; ++i) g[i] = rng.normal();
  const VectorXd draw = mu + llt.matrixL().transpose().solve(g);
  for (int j = 0; j < m; ++j) theta[s.indices()[j]] = draw[j];
  return theta;
}

}  // namespace spikeslab
