// Copyright 2026 The spikeslab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License is
// distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and limitations under the License.

#include "spikeslab/model.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <map>

#include "spikeslab/math.hpp"

using namespace spikeslab;

TEST_CASE("gen_gaussian_matrix is deterministic given the seed") {
  const MatrixXd a = gen_gaussian_matrix(4, 4, 99);
  const MatrixXd b = gen_gaussian_matrix(4, 4, 99);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);  // bitwise identical
  const MatrixXd c = gen_gaussian_matrix(4, 4, 100);
  CHECK((a - c).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("gen_gaussian_matrix columns are near unit norm") {
  // Chi-square tails put every column norm within [0.85, 1.15] at n = 1000
  // except with probability far below 1e-6 per column.
  const MatrixXd X = gen_gaussian_matrix(1000, 10, 2024);
  for (int j = 0; j < X.cols(); ++j) {
    CHECK(X.col(j).norm() > 0.85);
    CHECK(X.col(j).norm() < 1.15);
  }
}

TEST_CASE("gen_gaussian_matrix entries have near-zero empirical mean") {
  const int n = 200, d = 400;
  const MatrixXd X = gen_gaussian_matrix(n, d, 7);
  const double mean = X.sum() / (n * d);
  // CLT: entries have sd 1/sqrt(n); the mean of n*d of them has sd
  // 1/(sqrt(n) sqrt(n d)). Four sigmas.
  CHECK(std::fabs(mean) < 4.0 / (std::sqrt(static_cast<double>(n)) * std::sqrt(1.0 * n * d)));
}

TEST_CASE("gen_rademacher_matrix has +-1/sqrt(n) entries") {
  const int n = 16;
  const MatrixXd X = gen_rademacher_matrix(n, 8, 3);
  const double v = 1.0 / std::sqrt(static_cast<double>(n));
  for (int j = 0; j < X.cols(); ++j)
    for (int i = 0; i < n; ++i) CHECK(std::fabs(std::fabs(X(i, j)) - v) < 1e-15);
  for (int j = 0; j < X.cols(); ++j) CHECK(X.col(j).norm() == doctest::Approx(1.0));
}

TEST_CASE("draw_instance honors degenerate priors") {
  const MatrixXd X = gen_gaussian_matrix(8, 5, 1);

  PriorSpec zero;
  zero.q = VectorXd::Zero(5);
  const Instance inst0 = draw_instance(zero, X, 0.3, 11);
  CHECK(inst0.theta_star->cwiseAbs().maxCoeff() == 0.0);
  CHECK((inst0.y - *inst0.xi).cwiseAbs().maxCoeff() == 0.0);

  PriorSpec ones;
  ones.q = VectorXd::Ones(5);
  ones.diffuse = Diffuse::GaussianN01;
  const Instance inst1 = draw_instance(ones, X, 0.0, 11);
  for (int i = 0; i < 5; ++i) CHECK((*inst1.theta_star)[i] != 0.0);
  CHECK((inst1.y - X * (*inst1.theta_star)).cwiseAbs().maxCoeff() == 0.0);
  inst1.validate();
}

TEST_CASE("draw_instance support size matches the binomial mean") {
  PriorSpec prior;
  prior.q = VectorXd::Constant(20, 0.5);
  const MatrixXd X = gen_gaussian_matrix(4, 20, 5);
  RngStream seeds(77);
  double total = 0.0;
  const int reps = 100000;
  for (int r = 0; r < reps; ++r) {
    const Instance inst = draw_instance(prior, X, 1.0, seeds.next_u64());
    for (int i = 0; i < 20; ++i) total += ((*inst.theta_star)[i] != 0.0) ? 1.0 : 0.0;
  }
  CHECK(total / reps == doctest::Approx(10.0).epsilon(0.005));  // 10 +- 0.05
}

TEST_CASE("draw_instance per-support frequencies follow the product law") {
  PriorSpec prior;
  prior.q = VectorXd(3);
  prior.q << 0.7, 0.2, 0.5;
  const MatrixXd X = gen_gaussian_matrix(2, 3, 5);
  RngStream seeds(13);
  const int reps = 40000;
  std::map<std::uint32_t, int> counts;
  for (int r = 0; r < reps; ++r) {
    const Instance inst = draw_instance(prior, X, 1.0, seeds.next_u64());
    std::uint32_t mask = 0;
    for (int i = 0; i < 3; ++i)
      if ((*inst.theta_star)[i] != 0.0) mask |= (1u << i);
    counts[mask]++;
  }
  for (std::uint32_t mask = 0; mask < 8; ++mask) {
    double p = 1.0;
    for (int i = 0; i < 3; ++i) p *= (mask & (1u << i)) ? prior.q[i] : 1.0 - prior.q[i];
    const double phat = counts[mask] / static_cast<double>(reps);
    CHECK(std::fabs(phat - p) < 4.0 * std::sqrt(p * (1 - p) / reps));
  }
}

TEST_CASE("verify_rip exact cases") {
  SUBCASE("identity is an exact isometry") {
    const MatrixXd X = MatrixXd::Identity(6, 6);
    const RipReport r = verify_rip(X, 2, 100);
    CHECK(r.eps_hat == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.exhaustive);
    CHECK(r.subsets_tested == 15);
  }
  SUBCASE("a stretched column shows up at s = 1") {
    MatrixXd X = MatrixXd::Identity(5, 5);
    X(0, 0) = std::sqrt(2.0);
    const RipReport r = verify_rip(X, 1, 100);
    CHECK(r.eps_hat == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("level-1 constant equals the worst column-norm deviation") {
    const MatrixXd X = gen_gaussian_matrix(50, 12, 21);
    const RipReport r = verify_rip(X, 1, 1000);
    double worst = 0.0;
    for (int j = 0; j < 12; ++j)
      worst = std::max(worst, std::fabs(X.col(j).squaredNorm() - 1.0));
    CHECK(r.eps_hat == doctest::Approx(worst).epsilon(1e-12));
  }
}

TEST_CASE("verify_rip on a tall Gaussian matrix is comfortably small") {
  const MatrixXd X = gen_gaussian_matrix(300, 30, 4);
  const RipReport r = verify_rip(X, 3, 10000);
  CHECK(r.exhaustive);
  CHECK(r.subsets_tested == 4060);
  CHECK(r.eps_hat <= 0.6);
}

TEST_CASE("verify_rip downgrades to sampling past the exhaustive limit") {
  const MatrixXd X = gen_gaussian_matrix(40, 30, 8);
  const RipReport exact = verify_rip(X, 2, 100000);
  const RipReport sampled = verify_rip(X, 2, 50);
  CHECK(!sampled.exhaustive);
  CHECK(sampled.subsets_tested == 50);
  CHECK(sampled.eps_hat <= exact.eps_hat + 1e-12);  // lower bound
  CHECK_THROWS_AS(verify_rip(X, 31, 10), std::invalid_argument);
}

TEST_CASE("rip_to_mi_bound values and monotonicity") {
  CHECK(rip_to_mi_bound(0.0, 5) == 0.0);
  CHECK(rip_to_mi_bound(1.0 / 9.0, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(rip_to_mi_bound(1.0 / 3.0, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(rip_to_mi_bound(1.0, 1), std::domain_error);

  double prev = -1.0;
  for (double eps = 0.01; eps < 0.99; eps += 0.07) {
    const double a = rip_to_mi_bound(eps, 3);
    CHECK(a > prev);
    prev = a;
    CHECK(rip_to_mi_bound(eps, 4) > a);
  }
}

TEST_CASE("noise_colip_bound values and Monte Carlo coverage") {
  CHECK(noise_colip_bound(1.0, 0.0, 1, std::exp(-2.0)) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(noise_colip_bound(0.0, 0.3, 50, 0.1) == 0.0);
  CHECK_THROWS_AS(noise_colip_bound(1.0, 0.0, 10, 1.5), std::domain_error);

  const int n = 400, d = 200;
  const double sigma = 0.7, delta = 0.05;
  const MatrixXd X = gen_gaussian_matrix(n, d, 31);
  const double eps = verify_rip(X, 1, 1000).eps_hat;
  const double bound = noise_colip_bound(sigma, eps, d, delta);
  RngStream rng(55);
  int violations = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    VectorXd xi(n);
    for (int i = 0; i < n; ++i) xi[i] = sigma * rng.normal();
    if ((X.transpose() * xi).cwiseAbs().maxCoeff() > bound) ++violations;
  }
  const double limit = delta + 2.0 * std::sqrt(delta * (1 - delta) / trials);
  CHECK(violations / static_cast<double>(trials) <= limit);
}

TEST_CASE("instance validation rejects inconsistent data") {
  const MatrixXd X = gen_gaussian_matrix(6, 4, 2);
  PriorSpec prior;
  prior.q = VectorXd::Constant(4, 0.5);
  Instance inst = draw_instance(prior, X, 0.5, 3);
  inst.validate();
  inst.y[0] += 1.0;
  CHECK_THROWS_AS(inst.validate(), std::invalid_argument);

  PriorSpec bad;
  bad.q = VectorXd::Constant(4, 1.5);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
