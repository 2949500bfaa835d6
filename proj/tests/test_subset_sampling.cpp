// Copyright 2026 The spikeslab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License is
// distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and limitations under the License.

#include "spikeslab/subset_sampling.hpp"

#include <doctest.h>

#include <bit>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

using namespace spikeslab;

namespace {

// Brute-force value of F(i, j): sum over subsets of {i..d} of size j of the
// product of odds ratios.
double brute_force_F(const VectorXd& p, int i, int j) {
  const int d = static_cast<int>(p.size());
  const int m = d - i + 1;  // coordinates i..d available
  double total = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    if (std::popcount(mask) != j) continue;
    double prod = 1.0;
    for (int b = 0; b < m; ++b)
      if (mask & (1u << b)) prod *= p[i - 1 + b] / (1.0 - p[i - 1 + b]);
    total += prod;
  }
  return total;
}

VectorXd random_p(RngStream& rng, int d, double lo, double hi) {
  VectorXd p(d);
  for (int i = 0; i < d; ++i) p[i] = lo + (hi - lo) * rng.uniform();
  return p;
}

}  // namespace

TEST_CASE("DP table values on hand-checked inputs") {
  SUBCASE("all-half probabilities give binomial coefficients") {
    VectorXd p = VectorXd::Constant(2, 0.5);
    const DpTable t = DpTable::build(p, 2);
    CHECK(t.value(1, 0) == doctest::Approx(1.0));
    CHECK(t.value(1, 1) == doctest::Approx(2.0));
    CHECK(t.value(1, 2) == doctest::Approx(1.0));
  }
  SUBCASE("p = (1/3, 1/2)") {
    VectorXd p(2);
    p << 1.0 / 3.0, 0.5;
    const DpTable t = DpTable::build(p, 2);
    CHECK(t.value(1, 1) == doctest::Approx(1.5));
    CHECK(t.value(1, 2) == doctest::Approx(0.5));
  }
  SUBCASE("k = 0 keeps only the unit column") {
    VectorXd p = VectorXd::Constant(4, 0.3);
    const DpTable t = DpTable::build(p, 0);
    for (int i = 1; i <= 5; ++i) CHECK(t.value(i, 0) == doctest::Approx(1.0));
    RngStream rng(1);
    CHECK(t.sample(rng).empty());
  }
}

TEST_CASE("DP identity against brute force for random p, d <= 12") {
  RngStream rng(42);
  for (int rep = 0; rep < 10; ++rep) {
    const int d = 3 + static_cast<int>(rng.uniform_int(10));
    const int k = static_cast<int>(rng.uniform_int(d + 1));
    const VectorXd p = random_p(rng, d, 0.02, 0.95);
    const DpTable t = DpTable::build(p, k);
    for (int i = 1; i <= d + 1; ++i) {
      for (int j = 0; j <= k; ++j) {
        const double want = brute_force_F(p, i, j);
        if (want == 0.0) {
          CHECK(t.value(i, j) == 0.0);
        } else {
          CHECK(t.value(i, j) == doctest::Approx(want).epsilon(1e-10));
        }
      }
    }
  }
}

TEST_CASE("DP table rejects out-of-range probabilities") {
  VectorXd p(2);
  p << 0.5, 1.0;
  CHECK_THROWS_AS(DpTable::build(p, 1), std::domain_error);
  p << -0.1, 0.5;
  CHECK_THROWS_AS(DpTable::build(p, 1), std::domain_error);
}

TEST_CASE("log-domain and linear tables agree") {
  RngStream rng(7);
  const VectorXd p = random_p(rng, 8, 0.05, 0.9);
  const DpTable lin = DpTable::build(p, 4);
  VectorXd log_odds(8);
  for (int i = 0; i < 8; ++i) log_odds[i] = std::log(p[i] / (1.0 - p[i]));
  // Huge synthetic odds force log mode in build_from_log_odds; mix in the
  // real ones to compare on the overlap.
  const DpTable viaodds = DpTable::build_from_log_odds(log_odds, 4);
  for (int i = 1; i <= 9; ++i) {
    for (int j = 0; j <= 4; ++j) {
      const double a = lin.log_value(i, j), b = viaodds.log_value(i, j);
      if (std::isinf(a) || std::isinf(b)) {
        CHECK(a == b);
      } else {
        CHECK(a == doctest::Approx(b).epsilon(1e-10));
      }
    }
  }

  // Extreme odds must not overflow.
  VectorXd wild(6);
  wild << 500.0, -30.0, 200.0, 0.0, 650.0, -std::numeric_limits<double>::infinity();
  const DpTable t = DpTable::build_from_log_odds(wild, 3);
  CHECK(t.log_domain());
  CHECK(std::isfinite(t.log_value(1, 3)));
  RngStream rng2(3);
  const SupportSet s = t.sample(rng2);
  CHECK(s.size() <= 3);
  CHECK(!s.contains(5));  // -inf odds is never selected
}

TEST_CASE("F(i, j) is nonincreasing in i for fixed j") {
  RngStream rng(11);
  const VectorXd p = random_p(rng, 10, 0.05, 0.9);
  const DpTable t = DpTable::build(p, 5);
  for (int j = 0; j <= 5; ++j)
    for (int i = 1; i <= 10; ++i) CHECK(t.value(i, j) >= t.value(i + 1, j) - 1e-14);
}

TEST_CASE("conditional_poisson pmf: hand values and normalization") {
  SUBCASE("three fair coins capped at one success") {
    VectorXd p = VectorXd::Constant(3, 0.5);
    const DpTable t = DpTable::build(p, 1);
    CHECK(t.pmf(SupportSet{}) == doctest::Approx(0.25));
    for (int i = 0; i < 3; ++i)
      CHECK(t.pmf(SupportSet{{i}}) == doctest::Approx(0.25));
  }
  SUBCASE("two fair coins capped at one removes the pair") {
    VectorXd p = VectorXd::Constant(2, 0.5);
    const DpTable t = DpTable::build(p, 1);
    CHECK(t.pmf(SupportSet{}) == doctest::Approx(1.0 / 3.0));
    CHECK(t.pmf(SupportSet{{0}}) == doctest::Approx(1.0 / 3.0));
    CHECK(t.pmf(SupportSet{{1}}) == doctest::Approx(1.0 / 3.0));
    CHECK(t.pmf(SupportSet{{0, 1}}) == 0.0);  // exceeds the cap
  }
  SUBCASE("p = (1/3, 1/2), k = 1, S = {2}") {
    VectorXd p(2);
    p << 1.0 / 3.0, 0.5;
    const DpTable t = DpTable::build(p, 1);
    CHECK(t.pmf(SupportSet{{1}}) == doctest::Approx(0.4).epsilon(1e-12));
  }
  SUBCASE("pmf sums to one over the admissible family") {
    RngStream rng(9);
    for (int rep = 0; rep < 5; ++rep) {
      const int d = 4 + static_cast<int>(rng.uniform_int(9));  // up to 12
      const int k = 1 + static_cast<int>(rng.uniform_int(d));
      const VectorXd p = random_p(rng, d, 0.05, 0.9);
      const DpTable t = DpTable::build(p, k);
      double total = 0.0;
      for (std::uint32_t mask = 0; mask < (1u << d); ++mask) {
        const SupportSet s = SupportSet::from_mask(mask);
        if (s.size() <= k) total += t.pmf(s);
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("two-phase sampler law matches the pmf analytically") {
  // Pr[output = S] telescopes to pmf(S): walk the algorithm's branch
  // probabilities explicitly and compare.
  RngStream rng(21);
  const int d = 7, k = 3;
  const VectorXd p = random_p(rng, d, 0.05, 0.9);
  const DpTable t = DpTable::build(p, k);

  std::vector<double> logF1(k + 1);
  for (int j = 0; j <= k; ++j) logF1[j] = t.log_value(1, j);
  const double logz = logsumexp(std::span<const double>(logF1));

  for (std::uint32_t mask = 0; mask < (1u << d); ++mask) {
    const SupportSet s = SupportSet::from_mask(mask);
    if (s.size() > k) continue;
    const int ell = s.size();
    double logprob = t.log_value(1, ell) - logz;  // phase 1
    int r = ell;
    for (int i = 1; i <= d && r > 0; ++i) {
      const double odds = p[i - 1] / (1.0 - p[i - 1]);
      const double take = odds * t.value(i + 1, r - 1) / t.value(i, r);
      if (s.contains(i - 1)) {
        logprob += std::log(take);
        --r;
      } else {
        logprob += std::log1p(-take);
      }
    }
    CHECK(std::exp(logprob) == doctest::Approx(t.pmf(s)).epsilon(1e-10));
  }
}

TEST_CASE("empirical conditional Poisson frequencies pass chi-square") {
  RngStream rng(31);
  VectorXd p(3);
  p << 0.9, 0.1, 0.3;
  const DpTable t = DpTable::build(p, 2);
  const int draws = 1000000;
  std::map<std::uint32_t, int> counts;
  RngStream sampler_rng(17);
  for (int i = 0; i < draws; ++i) counts[t.sample(sampler_rng).to_mask()]++;

  double chi2 = 0.0;
  int cells = 0;
  for (std::uint32_t mask = 0; mask < 8; ++mask) {
    const SupportSet s = SupportSet::from_mask(mask);
    if (s.size() > 2) {
      CHECK(counts[mask] == 0);
      continue;
    }
    const double expect = draws * t.pmf(s);
    chi2 += (counts[mask] - expect) * (counts[mask] - expect) / expect;
    ++cells;
  }
  CHECK(chi2_sf(chi2, cells - 1) > 1e-3);
}

TEST_CASE("rejection sampler: P equals Q reproduces the base law") {
  // Two-point domain; base law (0.3, 0.7); P = Q so acceptance probability is
  // exactly 1/C^2 each attempt and the output law equals the base law.
  RejectionSpec<int> spec;
  spec.log_P = [](const int&) { return 0.5; };
  spec.log_Q = [](const int&) { return 0.5; };
  spec.C = 2.0;
  spec.delta = 1e-3;

  RngStream rng(3);
  int ones = 0;
  const int n = 200000;
  std::uint64_t attempts = 0;
  for (int i = 0; i < n; ++i) {
    RejectionStats stats;
    const int x = rejection_sample<int>(
        spec, [](RngStream& r) { return r.uniform() < 0.7 ? 1 : 0; }, rng, &stats);
    ones += x;
    attempts += stats.attempts;
    CHECK(stats.accepted);
  }
  CHECK(ones / static_cast<double>(n) == doctest::Approx(0.7).epsilon(0.01));
  // Geometric with success probability 1/C^2 = 1/4  =>  mean 4 attempts.
  CHECK(attempts / static_cast<double>(n) == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("rejection sampler: C = 1 with P = Q accepts on the first attempt") {
  RejectionSpec<int> spec;
  spec.log_P = [](const int&) { return 0.0; };
  spec.log_Q = [](const int&) { return 0.0; };
  spec.C = 1.0;
  spec.delta = 0.01;
  RngStream rng(9);
  for (int i = 0; i < 1000; ++i) {
    RejectionStats stats;
    (void)rejection_sample<int>(spec, [](RngStream& r) { return int(r.uniform_int(2)); },
                                rng, &stats);
    CHECK(stats.attempts == 1);
  }
}

TEST_CASE("rejection sampler reweights a uniform base to a 2:1 target") {
  // Omega = {a=0, b=1}, base uniform, P ~ (2, 1), Q ~ (1, 1), C = 2.
  RejectionSpec<int> spec;
  spec.log_P = [](const int& w) { return w == 0 ? std::log(2.0) : 0.0; };
  spec.log_Q = [](const int&) { return 0.0; };
  spec.C = 2.0;
  spec.delta = 1e-3;
  RngStream rng(12);
  int a = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    a += 1 - rejection_sample<int>(
                 spec, [](RngStream& r) { return int(r.uniform_int(2)); }, rng);
  }
  CHECK(a / static_cast<double>(n) == doctest::Approx(2.0 / 3.0).epsilon(0.015));
}

TEST_CASE("rejection sampler flags ratio contract violations") {
  RejectionSpec<int> spec;
  spec.log_P = [](const int& w) { return w == 1 ? std::log(10.0) : 0.0; };
  spec.log_Q = [](const int&) { return 0.0; };
  spec.C = 2.0;
  spec.delta = 0.01;
  RngStream rng(4);
  CHECK_THROWS_AS(rejection_sample<int>(spec, [](RngStream&) { return 1; }, rng),
                  ContractViolation);

  spec.policy = RatioPolicy::kClamp;
  RejectionStats stats;
  (void)rejection_sample<int>(spec, [](RngStream&) { return 1; }, rng, &stats);
  CHECK(stats.log_ratio_max == doctest::Approx(std::log(10.0)));
}

TEST_CASE("exact output law of the capped sampler is within delta in TV") {
  // Finite-domain computation of the mixture law
  //   nu = (1 - (1-p_acc)^A) pi + (1-p_acc)^A mu
  // for a deliberately unbalanced pair with pointwise ratio touching both
  // C and 1/C, across the C and delta grid of the acceptance suite.
  for (double C : {1.0, 2.0, 5.0}) {
    for (double delta : {1e-2, 1e-3}) {
      const int m = 4;
      std::vector<double> P(m), Q(m, 1.0);
      for (int w = 0; w < m; ++w) P[w] = (w % 2 == 0) ? 1.0 / C : C;
      const double sum_p = std::accumulate(P.begin(), P.end(), 0.0);
      const double sum_q = static_cast<double>(m);

      RejectionSpec<int> spec;
      spec.C = C;
      spec.delta = delta;
      const double A = static_cast<double>(spec.attempt_cap());

      const double p_acc = (sum_p / sum_q) / (C * C);
      const double fail = std::pow(1.0 - p_acc, A);
      double tv_mu_pi = 0.0;
      for (int w = 0; w < m; ++w) tv_mu_pi += 0.5 * std::fabs(P[w] / sum_p - Q[w] / sum_q);
      CHECK(fail * tv_mu_pi <= delta);
    }
  }
}
