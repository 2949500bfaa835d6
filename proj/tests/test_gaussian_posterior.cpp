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

#include <doctest.h>

#include <cmath>
#include <map>

#include "spikeslab/errors.hpp"
#include "spikeslab/math.hpp"
#include "spikeslab/oracle.hpp"
#include "test_util.hpp"

using namespace spikeslab;

namespace {

Instance make_instance(int n, int d, double sigma, double q, std::uint64_t seed) {
  PriorSpec prior;
  prior.q = VectorXd::Constant(d, q);
  RngStream root(seed);
  const MatrixXd X = gen_gaussian_matrix(n, d, root.next_u64());
  return draw_instance(prior, X, sigma, root.next_u64());
}

HintEstimate zero_hint(int d) {
  HintEstimate h;
  h.theta_hat = VectorXd::Zero(d);
  return h;
}

HintEstimate hint_from_vector(const VectorXd& v) {
  HintEstimate h;
  h.theta_hat = v;
  std::vector<int> idx;
  for (int i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) idx.push_back(i);
  h.support = SupportSet(std::move(idx));
  return h;
}

}  // namespace

TEST_CASE("recenter formulas") {
  const Instance inst = make_instance(12, 5, 0.5, 0.3, 7);

  SUBCASE("zero hint gives z = X^T y / sigma^2") {
    const RecenteredState s = recenter(inst, VectorXd::Zero(5));
    const VectorXd want = inst.X.transpose() * inst.y / 0.25;
    CHECK((s.z - want).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(s.T.empty());
  }
  SUBCASE("identity design, sigma = 1: z = y - 2 theta_hat") {
    Instance ident;
    ident.X = MatrixXd::Identity(4, 4);
    ident.sigma = 1.0;
    ident.prior.q = VectorXd::Constant(4, 0.5);
    RngStream r(3);
    VectorXd y(4), th(4);
    for (int i = 0; i < 4; ++i) {
      y[i] = r.normal();
      th[i] = r.normal();
    }
    ident.y = y;
    const RecenteredState s = recenter(ident, th);
    CHECK((s.z - (y - 2.0 * th)).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("sigma = 0 is rejected") {
    Instance bad = inst;
    bad.sigma = 0.0;
    bad.xi.reset();
    bad.theta_star.reset();
    CHECK_THROWS_AS(recenter(bad, VectorXd::Zero(5)), std::domain_error);
  }
}

TEST_CASE("recentering identity holds to 1e-9 relative") {
  RngStream seeds(101);
  for (int rep = 0; rep < 50; ++rep) {
    const int d = 6 + static_cast<int>(seeds.uniform_int(25));  // up to 30
    const int n = d + 10 + static_cast<int>(seeds.uniform_int(30));
    const Instance inst = make_instance(n, d, 0.2 + seeds.uniform(), 0.3, seeds.next_u64());

    // Random hint support T, then random supersets S, S'.
    VectorXd th = VectorXd::Zero(d);
    std::vector<int> t_idx;
    for (int i = 0; i < d; ++i) {
      if (seeds.uniform() < 0.2) {
        th[i] = seeds.normal();
        t_idx.push_back(i);
      }
    }
    auto superset = [&](RngStream& r) {
      std::vector<int> s = t_idx;
      for (int i = 0; i < d; ++i)
        if (r.uniform() < 0.3) s.push_back(i);
      return SupportSet(std::move(s));
    };
    const SupportSet s1 = superset(seeds), s2 = superset(seeds);

    const RecenteredState state = recenter(inst, th);
    const VectorXd b = inst.X.transpose() * inst.y / (inst.sigma * inst.sigma);
    auto quad = [&](const SupportSet& s, const VectorXd& v) {
      if (s.empty()) return 0.0;
      const MatrixXd a = state.precision_on(s);
      VectorXd vs(s.size());
      for (int i = 0; i < s.size(); ++i) vs[i] = v[s.indices()[i]];
      return 0.5 * vs.dot(a.llt().solve(vs));
    };
    const double lhs = quad(s1, b) - quad(s2, b);
    const double rhs = quad(s1, state.z) - quad(s2, state.z);
    CHECK(std::fabs(lhs - rhs) <= 1e-9 * std::max({1.0, std::fabs(lhs), std::fabs(rhs)}));
  }
}

TEST_CASE("log_Q_gaussian closed-form values") {
  Instance ident;
  ident.X = MatrixXd::Identity(3, 3);
  ident.sigma = 1.0;
  ident.prior.q = VectorXd::Constant(3, 0.5);
  ident.y = VectorXd::Zero(3);
  const RecenteredState s = recenter(ident, VectorXd::Zero(3));
  CHECK(log_Q_gaussian(s, SupportSet{}) == 0.0);
  // q = 1/2, sigma = 1, z_i = 0: log Q({i}) = -0.5 ln 2.
  CHECK(log_Q_gaussian(s, SupportSet{{1}}) ==
        doctest::Approx(-0.5 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("log_Q_gaussian matches the naive product on random supports") {
  const Instance inst = make_instance(30, 20, 0.6, 0.35, 5);
  const RecenteredState state = recenter(inst, VectorXd::Zero(20));
  RngStream rng(8);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<int> idx;
    for (int i = 0; i < 20; ++i)
      if (rng.uniform() < 0.4) idx.push_back(i);
    const SupportSet s(std::move(idx));
    double direct = 0.0;
    const double shrink = 0.36 / 1.36;
    for (int i : s.indices()) {
      direct += std::log(0.35 / 0.65) + 0.5 * std::log(shrink) +
                0.5 * shrink * state.z[i] * state.z[i];
    }
    CHECK(log_Q_gaussian(state, s) == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("log_P_gaussian closed-form values") {
  Instance ident;
  ident.X = MatrixXd::Identity(3, 3);
  ident.sigma = 1.0;
  ident.prior.q = VectorXd::Constant(3, 0.5);
  ident.y = VectorXd::Zero(3);
  const RecenteredState s = recenter(ident, VectorXd::Zero(3));
  CHECK(log_P_gaussian(s, SupportSet{}) == 0.0);
  // [X^T X]_S = I, sigma = 1, q = 1/2, z = 0: A_S = 2, log P = -0.5 ln 2.
  CHECK(log_P_gaussian(s, SupportSet{{2}}) ==
        doctest::Approx(-0.5 * std::log(2.0)).epsilon(1e-12));
  // Ratio P/Q = 1 at eps = 0.
  CHECK(log_P_gaussian(s, SupportSet{{0, 2}}) ==
        doctest::Approx(log_Q_gaussian(s, SupportSet{{0, 2}})).epsilon(1e-12));
}

TEST_CASE("normalized exp(log_P) reproduces the enumeration oracle") {
  const Instance inst = make_instance(40, 10, 0.5, 0.25, 23);
  const SupportPmf oracle = enumerate_posterior_gaussian(inst);

  SUBCASE("zero hint covers the whole family") {
    const RecenteredState state = recenter(inst, VectorXd::Zero(10));
    std::vector<double> logw(1024);
    for (std::uint32_t mask = 0; mask < 1024; ++mask)
      logw[mask] = log_P_gaussian(state, SupportSet::from_mask(mask));
    const double logz = logsumexp(std::span<const double>(logw));
    double tv = 0.0;
    for (std::uint32_t mask = 0; mask < 1024; ++mask)
      tv += 0.5 * std::fabs(std::exp(logw[mask] - logz) -
                            oracle.prob(SupportSet::from_mask(mask)));
    CHECK(tv <= 1e-9);
  }

  SUBCASE("nonzero hint matches the oracle conditioned on its restriction set") {
    VectorXd th = VectorXd::Zero(10);
    th[3] = 0.8;
    const RecenteredState state = recenter(inst, th);
    const int cap = 6;
    double oracle_mass = 0.0;
    std::map<std::uint32_t, double> cond;
    for (std::uint32_t mask = 0; mask < 1024; ++mask) {
      const SupportSet s = SupportSet::from_mask(mask);
      if (!s.contains(3) || s.size() > cap) continue;
      cond[mask] = oracle.prob(s);
      oracle_mass += oracle.prob(s);
    }
    std::vector<double> logw;
    std::vector<std::uint32_t> masks;
    for (const auto& [mask, p] : cond) {
      masks.push_back(mask);
      logw.push_back(log_P_gaussian(state, SupportSet::from_mask(mask)));
    }
    const double logz = logsumexp(std::span<const double>(logw));
    double tv = 0.0;
    for (size_t i = 0; i < masks.size(); ++i)
      tv += 0.5 * std::fabs(std::exp(logw[i] - logz) - cond[masks[i]] / oracle_mass);
    CHECK(tv <= 1e-9);
  }
}

TEST_CASE("ratio_bounds_gaussian endpoints and ordering") {
  const auto [lo0, hi0] = ratio_bounds_gaussian(0.0, 8, 0.5, 3.0);
  CHECK(lo0 == 1.0);
  CHECK(hi0 == 1.0);
  for (double eps : {0.05, 0.2, 0.4}) {
    const auto [lo, hi] = ratio_bounds_gaussian(eps, 8, 0.5, 3.0);
    CHECK(lo <= 1.0);
    CHECK(hi >= 1.0);
  }
  CHECK_THROWS_AS(ratio_bounds_gaussian(0.5, 8, 0.5, 3.0), std::domain_error);
}

TEST_CASE("observed P/Q ratios stay inside the RIP envelope") {
  RngStream seeds(55);
  for (int rep = 0; rep < 5; ++rep) {
    const Instance inst = make_instance(48, 9, 0.3 + seeds.uniform(), 0.3, seeds.next_u64());
    const int k_star = 6;
    const double eps = verify_rip(inst.X, k_star, 100000).eps_hat;
    if (eps >= 0.5) continue;  // envelope formula does not apply
    const RecenteredState state = recenter(inst, VectorXd::Zero(9));
    RngStream rng(seeds.next_u64());
    for (int t = 0; t < 200; ++t) {
      std::vector<int> idx;
      for (int i = 0; i < 9; ++i)
        if (rng.uniform() < 0.4) idx.push_back(i);
      SupportSet s(std::move(idx));
      while (s.size() > k_star) s = SupportSet({s.indices()[0]});
      const double lr = log_P_gaussian(state, s) - log_Q_gaussian(state, s);
      double zsq = 0.0;
      for (int i : s.indices()) zsq += state.z[i] * state.z[i];
      const auto [lo, hi] = ratio_bounds_gaussian(eps, k_star, inst.sigma, zsq);
      CHECK(lr >= std::log(lo) - 1e-9);
      CHECK(lr <= std::log(hi) + 1e-9);
    }
  }
}

TEST_CASE("product_sample_gaussian respects the hint and the cap") {
  const Instance inst = make_instance(30, 12, 0.4, 0.3, 3);
  VectorXd th = VectorXd::Zero(12);
  th[2] = 1.0;
  const RecenteredState state = recenter(inst, th);
  SamplerConfig cfg;
  cfg.k_star = 5;
  RngStream rng(4);
  for (int t = 0; t < 500; ++t) {
    const SupportSet s = product_sample_gaussian(state, cfg, rng);
    CHECK(s.contains(2));
    CHECK(s.size() <= 5);
  }
}

TEST_CASE("product_sample_gaussian marginals are symmetric when z = 0") {
  Instance inst;
  inst.X = MatrixXd::Identity(6, 6);
  inst.sigma = 1.0;
  inst.prior.q = VectorXd::Constant(6, 0.3);
  inst.y = VectorXd::Zero(6);  // z = 0 with a zero hint
  const RecenteredState state = recenter(inst, VectorXd::Zero(6));
  SamplerConfig cfg;
  cfg.k_star = 4;
  RngStream rng(17);
  const int draws = 60000;
  VectorXd counts = VectorXd::Zero(6);
  for (int t = 0; t < draws; ++t) {
    const SupportSet s = product_sample_gaussian(state, cfg, rng);
    for (int i : s.indices()) counts[i] += 1.0;
  }
  const double mean = counts.mean();
  for (int i = 0; i < 6; ++i)
    CHECK(std::fabs(counts[i] - mean) < 5.0 * std::sqrt(mean));
}

TEST_CASE("product_sample_gaussian law matches the conditional Poisson pmf") {
  const Instance inst = make_instance(40, 10, 0.5, 0.25, 77);
  const RecenteredState state = recenter(inst, VectorXd::Zero(10));
  SamplerConfig cfg;
  cfg.k_star = 4;

  // Closed-form law: Q(S) restricted to |S| <= 4, normalized.
  std::map<std::uint32_t, double> law;
  {
    std::vector<double> logw;
    std::vector<std::uint32_t> masks;
    for (std::uint32_t mask = 0; mask < 1024; ++mask) {
      const SupportSet s = SupportSet::from_mask(mask);
      if (s.size() > 4) continue;
      masks.push_back(mask);
      logw.push_back(log_Q_gaussian(state, s));
    }
    const double logz = logsumexp(std::span<const double>(logw));
    for (size_t i = 0; i < masks.size(); ++i) law[masks[i]] = std::exp(logw[i] - logz);
  }

  RngStream rng(5);
  const int draws = 200000;
  std::map<std::uint32_t, int> counts;
  for (int t = 0; t < draws; ++t)
    counts[product_sample_gaussian(state, cfg, rng).to_mask()]++;

  double chi2 = 0.0;
  int cells = 0;
  double rare = 0.0;
  for (const auto& [mask, p] : law) {
    const double expect = draws * p;
    if (expect < 5.0) {  // pool ultra-rare cells
      rare += expect - counts[mask];
      continue;
    }
    chi2 += (counts[mask] - expect) * (counts[mask] - expect) / expect;
    ++cells;
  }
  CHECK(chi2_sf(chi2, cells - 1) > 1e-3);
}

TEST_CASE("posterior_sample_gaussian matches the oracle end to end (small)") {
  const Instance inst = make_instance(48, 8, 0.5, 0.25, 2025);
  const SupportPmf oracle = enumerate_posterior_gaussian(inst);

  SamplerConfig cfg;
  cfg.k_star = 8;
  cfg.eps = verify_rip(inst.X, 6, 100000).eps_hat;  // measured at the proposal cap
  cfg.delta = 0.02;
  cfg.ratio_cap = 25.0;
  cfg.audit_ratio_envelope = true;

  RngStream root(9);
  const int draws = 20000;
  std::vector<SupportSet> samples;
  samples.reserve(draws);
  SamplerReport agg;
  for (int i = 0; i < draws; ++i) {
    RngStream rng = root.child(i);
    auto res = posterior_sample_gaussian(inst, zero_hint(8), cfg, rng);
    samples.push_back(res.support);
    agg.merge(res.report);
  }
  const double tv = tv_distance(empirical_support_pmf(samples, 8), oracle);
  CHECK(tv < 0.05);
  CHECK(agg.accepted == static_cast<std::uint64_t>(draws));
}

TEST_CASE("posterior_sample_gaussian with an orthonormal design has unit ratios") {
  Instance inst;
  inst.X = testutil::orthonormal_columns(20, 8, 31);
  inst.sigma = 0.7;
  inst.prior.q = VectorXd::Constant(8, 0.25);
  RngStream r(6);
  VectorXd theta_star = VectorXd::Zero(8);
  theta_star[1] = 1.4;
  VectorXd xi(20);
  for (int i = 0; i < 20; ++i) xi[i] = inst.sigma * r.normal();
  inst.y = inst.X * theta_star + xi;

  SamplerConfig cfg;
  cfg.k_star = 8;
  cfg.eps = 0.0;
  cfg.ratio_cap = 3.0;
  RngStream root(11);
  SamplerReport agg;
  for (int i = 0; i < 200; ++i) {
    RngStream rng = root.child(i);
    auto res = posterior_sample_gaussian(inst, zero_hint(8), cfg, rng);
    agg.merge(res.report);
  }
  CHECK(std::fabs(agg.log_ratio_min) < 1e-9);
  CHECK(std::fabs(agg.log_ratio_max) < 1e-9);
}

TEST_CASE("posterior_sample propagates hint support into every draw") {
  const Instance inst = make_instance(64, 10, 0.3, 0.2, 404);
  VectorXd th = VectorXd::Zero(10);
  th[4] = 1.2;
  th[7] = -0.9;
  SamplerConfig cfg;
  cfg.k_star = 10;
  cfg.ratio_cap = 50.0;
  RngStream root(2);
  for (int i = 0; i < 300; ++i) {
    RngStream rng = root.child(i);
    const auto res = posterior_sample_gaussian(inst, hint_from_vector(th), cfg, rng);
    CHECK(res.support.contains(4));
    CHECK(res.support.contains(7));
    CHECK(res.support.size() <= 7);  // 3/4 of k_star
  }
}

TEST_CASE("draw_theta_given_support: conditional Gaussian law") {
  SUBCASE("empty support gives the zero vector") {
    const Instance inst = make_instance(10, 4, 0.5, 0.3, 1);
    RngStream rng(1);
    CHECK(draw_theta_given_support(inst, SupportSet{}, rng).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("identity design: theta_i ~ N(y_i/2, 1/2)") {
    Instance inst;
    inst.X = MatrixXd::Identity(5, 5);
    inst.sigma = 1.0;
    inst.prior.q = VectorXd::Constant(5, 0.5);
    inst.y = VectorXd::Zero(5);
    inst.y[2] = 1.8;
    RngStream rng(3);
    const int n = 100000;
    double s = 0.0, s2 = 0.0;
    for (int t = 0; t < n; ++t) {
      const VectorXd th = draw_theta_given_support(inst, SupportSet{{2}}, rng);
      s += th[2];
      s2 += th[2] * th[2];
      CHECK(th[0] == 0.0);
    }
    const double mean = s / n, var = s2 / n - mean * mean;
    CHECK(mean == doctest::Approx(0.9).epsilon(0.02));
    CHECK(var == doctest::Approx(0.5).epsilon(0.03));
  }
  SUBCASE("moments match (mu_S, A_S^{-1}) within four standard errors") {
    const Instance inst = make_instance(30, 6, 0.6, 0.4, 12);
    const SupportSet s{{0, 3, 5}};
    const double inv_s2 = 1.0 / (inst.sigma * inst.sigma);
    MatrixXd cols(30, 3);
    for (int j = 0; j < 3; ++j) cols.col(j) = inst.X.col(s.indices()[j]);
    MatrixXd a = inv_s2 * (cols.transpose() * cols);
    a.diagonal().array() += 1.0;
    const MatrixXd cov = a.inverse();
    const VectorXd mu = cov * (inv_s2 * (cols.transpose() * inst.y));

    RngStream rng(8);
    const int n = 100000;
    VectorXd mean = VectorXd::Zero(3);
    MatrixXd second = MatrixXd::Zero(3, 3);
    for (int t = 0; t < n; ++t) {
      const VectorXd th = draw_theta_given_support(inst, s, rng);
      VectorXd v(3);
      for (int j = 0; j < 3; ++j) v[j] = th[s.indices()[j]];
      mean += v;
      second += v * v.transpose();
    }
    mean /= n;
    second /= n;
    const MatrixXd cov_hat = second - mean * mean.transpose();
    for (int j = 0; j < 3; ++j) {
      CHECK(std::fabs(mean[j] - mu[j]) <= 4.0 * std::sqrt(cov(j, j) / n));
      for (int l = 0; l < 3; ++l) {
        const double se =
            std::sqrt((cov(j, j) * cov(l, l) + cov(j, l) * cov(j, l)) / n);
        CHECK(std::fabs(cov_hat(j, l) - cov(j, l)) <= 4.0 * se);
      }
    }
  }
}

TEST_CASE("hint support is contained in oracle-posterior supports w.h.p.") {
  // Statistical containment property: over fresh instances, the posterior
  // mass of sets not containing the hint support stays below delta plus
  // sampling slack.
  RngStream seeds(7077);
  const double delta = 0.1;
  const int trials = 40;
  double miss_mass = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Instance inst = make_instance(64, 8, 0.25, 0.25, seeds.next_u64());
    RecoveryConfig rc;
    rc.c_inf = 1.0;
    rc.eps_override = 0.15;
    const HintEstimate hint = build_hint(inst, 8, 0.15, delta, rc);
    const SupportPmf oracle = enumerate_posterior_gaussian(inst);
    double miss = 0.0;
    for (const auto& [s, p] : oracle.entries)
      if (!s.contains_all(hint.support)) miss += p;
    miss_mass += miss;
  }
  const double avg_miss = miss_mass / trials;
  CHECK(avg_miss <= delta + 3.0 * std::sqrt(delta * (1 - delta) / trials));
}

TEST_CASE("degenerate prior entries: q = 1 forces, q = 0 drops") {
  PriorSpec prior;
  prior.q = VectorXd(6);
  prior.q << 1.0, 0.3, 0.0, 0.5, 0.2, 0.3;
  RngStream root(71);
  const MatrixXd X = gen_gaussian_matrix(40, 6, root.next_u64());
  const Instance inst = draw_instance(prior, X, 0.6, root.next_u64());

  SamplerConfig cfg;
  cfg.k_star = 6;
  cfg.ratio_cap = 30.0;
  RngStream draws(5);
  std::vector<SupportSet> samples;
  for (int i = 0; i < 20000; ++i) {
    RngStream rng = draws.child(i);
    const SupportSet s = posterior_sample_gaussian(inst, zero_hint(6), cfg, rng).support;
    CHECK(s.contains(0));   // almost-surely included coordinate
    CHECK(!s.contains(2));  // excluded coordinate
    samples.push_back(s);
  }
  const SupportPmf oracle = enumerate_posterior_gaussian(inst);
  CHECK(tv_distance(empirical_support_pmf(samples, 6), oracle) < 0.05);

  // The odds product itself is undefined at q = 1; the public weights say so.
  const RecenteredState state = recenter(inst, VectorXd::Zero(6));
  CHECK_THROWS_AS(log_Q_gaussian(state, SupportSet{{0}}), std::logic_error);
}

TEST_CASE("posterior_sample_gaussian is reproducible from the seed") {
  const Instance inst = make_instance(40, 8, 0.5, 0.25, 99);
  SamplerConfig cfg;
  cfg.k_star = 8;
  cfg.ratio_cap = 30.0;
  for (int i = 0; i < 50; ++i) {
    RngStream a(1000 + i), b(1000 + i);
    const auto ra = posterior_sample_gaussian(inst, zero_hint(8), cfg, a);
    const auto rb = posterior_sample_gaussian(inst, zero_hint(8), cfg, b);
    CHECK(ra.support == rb.support);
    CHECK(ra.report.attempts == rb.report.attempts);
  }
}
