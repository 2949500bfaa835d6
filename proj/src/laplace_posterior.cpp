// Copyright 2026 The spikeslab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License is
// distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and limitations under the License.

#include "spikeslab/laplace_posterior.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <iostream>
#include <vector>

#include "spikeslab/errors.hpp"
#include "spikeslab/math.hpp"

namespace spikeslab {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}
}  // namespace

LaplaceState recenter_laplace(const Instance& instance, const HintEstimate& hint,
                              double eps) {
  if (!(instance.sigma > 0.0))
    throw std::domain_error("recenter_laplace: sigma must be > 0");
  if (!(eps >= 0.0 && eps < 1.0))
    throw std::domain_error("recenter_laplace: eps must be in [0,1)");
  LaplaceState state;
  state.instance = &instance;
  state.sigma = instance.sigma;
  state.eps = eps;
  state.theta_hat = hint.theta_hat;
  state.T = hint.support;
  state.r = instance.y - instance.X * hint.theta_hat;
  state.u = (instance.X.transpose() * state.r) / (instance.sigma * instance.sigma);
  return state;
}

double log_laplace_slab_weight(double u, double sigma, double eps) {
  if (!std::isfinite(u)) throw std::domain_error("laplace_slab_weight: non-finite u");
  if (!(sigma > 0.0)) throw std::domain_error("laplace_slab_weight: sigma must be > 0");
  if (!(eps >= 0.0 && eps < 1.0))
    throw std::domain_error("laplace_slab_weight: eps must be in [0,1)");
  const double sp = sigma / std::sqrt(1.0 + eps);
  // Two half-line Gaussian integrals, each a tilted orthant mass.
  const double right = log_exp_half_sq_cdf(sp * (u - 1.0));
  const double left = log_exp_half_sq_cdf(-sp * (u + 1.0));
  return std::log(sp) + logsumexp(right, left);
}

double laplace_slab_weight(double u, double sigma, double eps) {
  return std::exp(log_laplace_slab_weight(u, sigma, eps));
}

namespace {

// One-sided truncation Z | Z >= a: inverse CDF through the upper-tail mass
// in the body, Robert's exponential rejection past a = 6.
double truncnorm_lower(double a, RngStream& rng) {
  if (a <= 6.0) {
    const double tail = norm_cdf(-a);
    return -norm_quantile(tail * rng.uniform());
  }
  const double alpha = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double z = a + rng.exponential() / alpha;
    const double w = z - alpha;
    if (std::log(rng.uniform()) <= -0.5 * w * w) return z;
  }
}

// Exact draw from the density on R proportional to exp(-a x^2/2 + c x - |x|):
// a two-piece Gaussian, each side a truncated normal.
double sample_two_piece(double a, double c, RngStream& rng) {
  const double sqrt_a = std::sqrt(a);
  const double t_right = (c - 1.0) / sqrt_a;
  const double t_left = -(c + 1.0) / sqrt_a;
  const double lw_right = log_exp_half_sq_cdf(t_right);
  const double lw_left = log_exp_half_sq_cdf(t_left);
  if (std::log(rng.uniform()) < lw_right - logsumexp(lw_right, lw_left)) {
    const double m = (c - 1.0) / a;
    return m + truncnorm_lower(-m * sqrt_a, rng) / sqrt_a;
  }
  const double m = (c + 1.0) / a;
  return m - truncnorm_lower(m * sqrt_a, rng) / sqrt_a;
}

// Systematic-scan chain for exp(-x^T A x / 2 + b^T x - ||x - t||_1) with an
// optional ridge shift (effective quadratic A + shift I). The kink offsets t
// support annealing in mode-centered coordinates; t = 0 recovers the plain
// quadratic-plus-l1 target. The linear form s = A x is maintained
// incrementally, so a shift change between annealing stages is free.
class GibbsChain {
 public:
  GibbsChain(const MatrixXd& a, const VectorXd& b, VectorXd x)
      : a_(a), b_(b), kink_(VectorXd::Zero(x.size())), x_(std::move(x)), s_(a * x_) {
    for (int j = 0; j < a_.rows(); ++j)
      if (!(a_(j, j) > 0.0))
        throw NumericalError("gibbs_quadratic_l1: non-positive diagonal in A");
  }

  void set_shift(double shift) { shift_ = shift; }
  void set_kink(VectorXd t) { kink_ = std::move(t); }

  void sweep(RngStream& rng) {
    const int k = static_cast<int>(x_.size());
    for (int j = 0; j < k; ++j) {
      const double a = a_(j, j) + shift_;
      const double c = b_[j] - (s_[j] - a_(j, j) * x_[j]);
      // v = x_j - t_j follows the standard two-piece density, tilted by
      // c - a t_j.
      const double v = sample_two_piece(a, c - a * kink_[j], rng);
      const double x = kink_[j] + v;
      if (x != x_[j]) {
        s_ += a_.col(j) * (x - x_[j]);
        x_[j] = x;
      }
    }
  }

  const VectorXd& state() const { return x_; }

 private:
  const MatrixXd& a_;
  const VectorXd& b_;
  VectorXd kink_;
  VectorXd x_;
  VectorXd s_;
  double shift_ = 0.0;
};

}  // namespace

VectorXd l1_quadratic_mode(const MatrixXd& A, const VectorXd& b) {
  const int k = static_cast<int>(A.rows());
  for (int j = 0; j < k; ++j)
    if (!(A(j, j) > 0.0))
      throw NumericalError("l1_quadratic_mode: non-positive diagonal in A");
  VectorXd theta = VectorXd::Zero(k);
  VectorXd s = VectorXd::Zero(k);  // A * theta
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  for (int iter = 0; iter < 1000; ++iter) {
    double moved = 0.0;
    for (int j = 0; j < k; ++j) {
      const double c = b[j] - (s[j] - A(j, j) * theta[j]);
      const double next = soft_threshold(c, 1.0) / A(j, j);
      if (next != theta[j]) {
        s += A.col(j) * (next - theta[j]);
        moved = std::max(moved, std::fabs(next - theta[j]));
        theta[j] = next;
      }
    }
    if (moved < 1e-13 * scale) break;
  }
  return theta;
}

VectorXd gibbs_quadratic_l1(const MatrixXd& A, const VectorXd& b, int sweeps,
                            RngStream& rng, const std::optional<VectorXd>& init) {
  if (A.rows() != A.cols() || A.rows() != b.size())
    throw std::invalid_argument("gibbs_quadratic_l1: dimension mismatch");
  if (A.rows() == 0) return VectorXd(0);
  GibbsChain chain(A, b, init ? *init : l1_quadratic_mode(A, b));
  for (int t = 0; t < sweeps; ++t) chain.sweep(rng);
  return chain.state();
}

double AnnealConfig::lambda_lower_bound(double R, int k, double Delta) {
  return 8.0 * R * std::sqrt(static_cast<double>(k)) / Delta +
         192.0 * k / (Delta * Delta) * (k + std::log(4.0 / Delta));
}

void AnnealConfig::validate() const {
  if (!(Delta > 0.0 && Delta < 1.0))
    throw std::invalid_argument("AnnealConfig: Delta must be in (0,1)");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("AnnealConfig: delta must be in (0,1)");
  if (gibbs_sweeps < 1 || burn_in_sweeps < 0)
    throw std::invalid_argument("AnnealConfig: sweep counts must be positive");
}

double estimate_log_Z(const MatrixXd& A, const VectorXd& b, const AnnealConfig& config,
                      RngStream& rng, AnnealStats* stats) {
  config.validate();
  const int k = static_cast<int>(A.rows());
  if (b.size() != k) throw std::invalid_argument("estimate_log_Z: dimension mismatch");
  if (k == 0) return 0.0;  // integral over R^0

  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(A, Eigen::EigenvaluesOnly);
  const double mu = eig.eigenvalues().minCoeff();
  if (!(mu > 0.0)) throw NumericalError("estimate_log_Z: A is not positive definite");

  // Anneal in coordinates centered at the composite mode m: with
  // w = theta - m, the target becomes exp(-w'Aw/2 + bc'w - h(w)) up to the
  // constant exp(-f(m)), where bc = b - Am has sup norm <= 1 by the KKT
  // conditions and h(w) = ||w + m||_1 - ||m||_1 is 1-Lipschitz with h(0) = 0.
  // The stage regularizers then act on ||w||^2, keeping the telescoping
  // weights' variance bounded uniformly in ||b||.
  const VectorXd mode = l1_quadratic_mode(A, b);
  const VectorXd bc = b - A * mode;
  const double f_mode = 0.5 * mode.dot(A * mode) - b.dot(mode) + mode.lpNorm<1>();

  const double R = bc.norm();
  const double lambda1 =
      std::max(config.lambda, AnnealConfig::lambda_lower_bound(R, k, config.Delta));

  // Geometric schedule shrinking the ridge by (1 + 1/sqrt(k)) per stage until
  // it is dominated by the curvature of f itself.
  std::vector<double> ridge;
  const double decay = 1.0 + 1.0 / std::sqrt(static_cast<double>(k));
  for (double l = lambda1; l > mu / k; l /= decay) {
    ridge.push_back(l);
    if (ridge.size() > 100000) throw NumericalError("estimate_log_Z: schedule blew up");
  }
  if (ridge.empty()) ridge.push_back(lambda1);
  const int stages = static_cast<int>(ridge.size());
  const std::uint64_t n_samples =
      config.N > 0 ? config.N
                   : static_cast<std::uint64_t>(
                         std::ceil(static_cast<double>(stages) * stages /
                                   (4.0 * config.Delta * config.Delta)));
  if (stats) {
    stats->stages = stages;
    stats->samples = 0;
  }

  // Gaussian reference constant at the most-regularized stage.
  MatrixXd m1 = A;
  m1.diagonal().array() += lambda1;
  Eigen::LLT<MatrixXd> llt(m1);
  if (llt.info() != Eigen::Success)
    throw NumericalError("estimate_log_Z: Cholesky of A + lambda I failed");
  double logdet = 0.0;
  for (int i = 0; i < k; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  double total = -f_mode + 0.5 * k * kLn2Pi + 0.5 * bc.dot(llt.solve(bc)) - 0.5 * logdet;

  GibbsChain chain(A, bc, VectorXd::Zero(k));
  chain.set_kink(-mode);
  chain.set_shift(ridge[0]);
  for (int t = 0; t < config.burn_in_sweeps; ++t) chain.sweep(rng);

  std::vector<double> expo;
  for (int i = 0; i < stages; ++i) {
    chain.set_shift(ridge[i]);
    if (i > 0)
      for (int t = 0; t < config.gibbs_sweeps; ++t) chain.sweep(rng);  // re-equilibrate
    const double next_ridge = (i + 1 < stages) ? ridge[i + 1] : 0.0;
    const double dl = ridge[i] - next_ridge;

    std::uint64_t budget = n_samples;
    for (int attempt = 0;; ++attempt) {
      expo.clear();
      expo.reserve(budget);
      for (std::uint64_t j = 0; j < budget; ++j) {
        for (int t = 0; t < config.gibbs_sweeps; ++t) chain.sweep(rng);
        expo.push_back(0.5 * chain.state().squaredNorm() * dl);
      }
      if (stats) stats->samples += budget;
      const double lse = logsumexp(std::span<const double>(expo));
      std::vector<double> twice(expo.size());
      for (size_t j = 0; j < expo.size(); ++j) twice[j] = 2.0 * expo[j];
      const double ess = std::exp(2.0 * lse - logsumexp(std::span<const double>(twice)));
      if (ess >= config.ess_guard) {
        total += lse - std::log(static_cast<double>(budget));
        break;
      }
      if (attempt >= 1)
        throw NumericalError("estimate_log_Z: stage " + std::to_string(i + 1) + " of " +
                             std::to_string(stages) + " diverged (weight ESS " +
                             std::to_string(ess) + ")");
      if (stats) ++stats->stage_retries;
      budget *= 4;
    }
  }
  return total;
}

namespace {

double log_prior_odds_laplace(const VectorXd& q, const SupportSet& s) {
  double total = 0.0;
  for (int i : s.indices()) {
    if (q[i] >= 1.0)
      throw std::logic_error("laplace log weight: q = 1 reached the odds product");
    total += (q[i] <= 0.0) ? kNegInf : std::log(q[i]) - std::log1p(-q[i]);
  }
  return total;
}

struct LaplaceProposal {
  SupportSet forced;
  std::vector<int> free_index;
  DpTable table;
};

LaplaceProposal make_laplace_proposal(const LaplaceState& state, int cap) {
  const VectorXd& q = state.q();
  const int d = state.d();

  std::vector<int> forced = state.T.indices();
  for (int i = 0; i < d; ++i)
    if (q[i] >= 1.0 && !state.T.contains(i)) forced.push_back(i);
  SupportSet forced_set(std::move(forced));

  std::vector<int> free_index;
  std::vector<double> log_odds;
  for (int i = 0; i < d; ++i) {
    if (forced_set.contains(i)) continue;
    if (q[i] <= 0.0) continue;
    // r_i = q_i v_i^-, p_i = r_i / (1 - q_i + r_i).
    const double log_r =
        std::log(q[i]) + log_laplace_slab_weight(state.u[i], state.sigma, state.eps);
    free_index.push_back(i);
    log_odds.push_back(log_r - std::log1p(-q[i]));
  }

  const int cap_free = cap - forced_set.size();
  if (cap_free < 0)
    throw std::invalid_argument("product_sample_laplace: cap below forced support size");
  Eigen::Map<const VectorXd> lo(log_odds.data(), static_cast<int>(log_odds.size()));
  return LaplaceProposal{std::move(forced_set), std::move(free_index),
                         DpTable::build_from_log_odds(lo, std::min<int>(cap_free, lo.size()))};
}

SupportSet draw_from_laplace_proposal(const LaplaceProposal& prop, RngStream& rng) {
  const SupportSet free_draw = prop.table.sample(rng);
  std::vector<int> chosen;
  chosen.reserve(free_draw.size());
  for (int pos : free_draw.indices()) chosen.push_back(prop.free_index[pos]);
  return prop.forced.united(SupportSet(std::move(chosen)));
}

SupportSet laplace_proposal_mode(const LaplaceProposal& prop, int cap) {
  std::vector<std::pair<double, int>> positives;
  for (int pos = 0; pos < static_cast<int>(prop.free_index.size()); ++pos)
    if (prop.table.p()[pos] > 0.5) positives.emplace_back(-prop.table.p()[pos], prop.free_index[pos]);
  std::sort(positives.begin(), positives.end());
  const int room = cap - prop.forced.size();
  std::vector<int> take;
  for (int i = 0; i < std::min<int>(room, positives.size()); ++i)
    take.push_back(positives[i].second);
  return prop.forced.united(SupportSet(std::move(take)));
}

// Sum of ln v^- over S: the Q weight without its constant factors.
double log_q_core_laplace(const LaplaceState& state, const SupportSet& s) {
  double total = 0.0;
  for (int i : s.indices())
    total += log_laplace_slab_weight(state.u[i], state.sigma, state.eps);
  return total;
}

// ln P~(S) without the prior-odds product (see log_P_tilde_laplace).
double log_p_tilde_core(const LaplaceState& state, const SupportSet& s,
                        const AnnealConfig& anneal, const RngStream& stream_base,
                        PTildeCache& cache) {
  {
    std::lock_guard<std::mutex> lock(cache.mu);
    auto it = cache.values.find(s);
    if (it != cache.values.end()) {
      ++cache.hits;
      return it->second;
    }
  }
  if (!s.contains_all(state.T))
    throw std::invalid_argument("log_P_tilde_laplace: S must contain the hint support");

  const int m = s.size();
  const double inv_s2 = 1.0 / (state.sigma * state.sigma);
  double value = -0.5 * m * kLn2Pi;
  if (m > 0) {
    MatrixXd cols(state.X().rows(), m);
    VectorXd th(m), us(m);
    for (int j = 0; j < m; ++j) {
      cols.col(j) = state.X().col(s.indices()[j]);
      th[j] = state.theta_hat[s.indices()[j]];
      us[j] = state.u[s.indices()[j]];
    }
    const MatrixXd a = inv_s2 * (cols.transpose() * cols);
    const VectorXd b = a * th + us;  // equals (1/sigma^2) [X^T y]_S
    value += -0.5 * th.dot(a * th) - us.dot(th);

    AnnealStats stats;
    RngStream est_rng = stream_base.child(fnv1a(s.key()));
    value += estimate_log_Z(a, b, anneal, est_rng, &stats);
    std::lock_guard<std::mutex> lock(cache.mu);
    cache.stage_retries += stats.stage_retries;
  }

  std::lock_guard<std::mutex> lock(cache.mu);
  auto [it, inserted] = cache.values.emplace(s, value);
  if (inserted)
    ++cache.computes;
  else
    ++cache.hits;  // concurrent first writer wins
  return it->second;
}

}  // namespace

SupportSet product_sample_laplace(const LaplaceState& state, const SamplerConfig& config,
                                  RngStream& rng) {
  const int k_star = config.effective_k_star(state.d(), state.q().sum());
  if (k_star < state.T.size())
    throw std::invalid_argument("product_sample_laplace: k_star < |supp(theta_hat)|");
  const LaplaceProposal prop = make_laplace_proposal(state, k_star);
  return draw_from_laplace_proposal(prop, rng);
}

double log_Q_laplace(const LaplaceState& state, const SupportSet& s) {
  return -state.theta_hat.lpNorm<1>() + log_prior_odds_laplace(state.q(), s) +
         log_q_core_laplace(state, s);
}

double log_P_tilde_laplace(const LaplaceState& state, const SupportSet& s,
                           const SamplerConfig& config, const AnnealConfig& anneal,
                           RngStream& rng, PTildeCache& cache) {
  (void)config;
  return log_prior_odds_laplace(state.q(), s) +
         log_p_tilde_core(state, s, anneal, rng, cache);
}

SampleResult posterior_sample_laplace(const Instance& instance, const HintEstimate& hint,
                                      const LaplaceSamplerConfig& config, RngStream& rng,
                                      PTildeCache& cache) {
  const auto t0 = std::chrono::steady_clock::now();
  const SamplerConfig& base = config.base;
  const double eps = std::isfinite(base.eps) ? base.eps : 0.0;
  LaplaceState state = recenter_laplace(instance, hint, eps);

  const int k_star = base.effective_k_star(instance.d(), instance.prior.expected_sparsity());
  if (instance.sigma > 1.0 / (6.0 * k_star)) {
    static bool warned = false;
    if (!warned) {
      std::cerr << "warning: sigma = " << instance.sigma << " exceeds 1/(6 k*) = "
                << 1.0 / (6.0 * k_star) << "; the Laplace ratio envelope is not certified "
                << "in this regime\n";
      warned = true;
    }
  }
  const int cap = (3 * k_star) / 4;
  const LaplaceProposal prop = make_laplace_proposal(state, cap);

  AnnealConfig anneal = config.anneal;
  if (anneal.Delta <= 0.0) anneal.Delta = base.delta / 12.0;

  const std::uint64_t computes0 = cache.computes, hits0 = cache.hits,
                      retries0 = cache.stage_retries;
  RngStream est_base = rng.split();

  auto raw_log_ratio = [&](const SupportSet& s) {
    const double lp = log_p_tilde_core(state, s, anneal, est_base, cache);
    const double lq = -state.theta_hat.lpNorm<1>() + log_q_core_laplace(state, s);
    const double lr = lp - lq;
    if (base.audit_ratio_envelope && lr < std::log1p(-anneal.Delta) - 1e-9)
      throw ContractViolation("laplace ratio audit: P~/Q = " + std::to_string(std::exp(lr)) +
                              " below the (1 - Delta) envelope on S = {" + s.key() + "}");
    return lr;
  };

  double offset = 0.0;
  if (base.renormalize_at_mode) offset = raw_log_ratio(laplace_proposal_mode(prop, cap));

  RejectionSpec<SupportSet> spec;
  spec.log_P = [&](const SupportSet& s) { return raw_log_ratio(s) - offset; };
  spec.log_Q = [](const SupportSet&) { return 0.0; };
  spec.C = base.effective_ratio_cap(4.0);
  spec.delta = base.delta / 8.0;
  spec.max_attempts = base.max_attempts;
  spec.policy = base.ratio_policy;
  spec.describe = [](const SupportSet& s) { return "S = {" + s.key() + "}"; };

  RejectionStats stats;
  SampleResult result;
  result.support = rejection_sample<SupportSet>(
      spec, [&](RngStream& r) { return draw_from_laplace_proposal(prop, r); }, rng, &stats);

  result.report.attempts = stats.attempts;
  result.report.accepted = stats.accepted ? 1 : 0;
  result.report.budget_exceeded = stats.budget_exceeded;
  result.report.log_ratio_min = stats.log_ratio_min + offset;
  result.report.log_ratio_max = stats.log_ratio_max + offset;
  result.report.z_estimates_computed = cache.computes - computes0;
  result.report.cache_hits = cache.hits - hits0;
  result.report.anneal_stage_failures = cache.stage_retries - retries0;
  result.report.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
          .count();
  return result;
}

VectorXd draw_theta_given_support_laplace(const Instance& instance, const SupportSet& s,
                                          int sweeps, RngStream& rng) {
  if (!(instance.sigma > 0.0))
    throw std::domain_error("draw_theta_given_support_laplace: sigma must be > 0");
  VectorXd theta = VectorXd::Zero(instance.d());
  if (s.empty()) return theta;
  const int m = s.size();
  const double inv_s2 = 1.0 / (instance.sigma * instance.sigma);
  MatrixXd cols(instance.n(), m);
  for (int j = 0; j < m; ++j) cols.col(j) = instance.X.col(s.indices()[j]);
  const MatrixXd a = inv_s2 * (cols.transpose() * cols);
  const VectorXd b = inv_s2 * (cols.transpose() * instance.y);
  const VectorXd draw = gibbs_quadratic_l1(a, b, sweeps, rng);
  for (int j = 0; j < m; ++j) theta[s.indices()[j]] = draw[j];
  return theta;
}

}  // namespace spikeslab
