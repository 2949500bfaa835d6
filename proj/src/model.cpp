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

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "spikeslab/math.hpp"

namespace spikeslab {

void PriorSpec::validate() const {
  if (q.size() < 1) throw std::invalid_argument("PriorSpec: d must be >= 1");
  for (int i = 0; i < q.size(); ++i) {
    if (!(q[i] >= 0.0 && q[i] <= 1.0))
      throw std::invalid_argument("PriorSpec: q[" + std::to_string(i + 1) +
                                  "] outside [0,1]");
  }
}

void Instance::validate() const {
  prior.validate();
  if (X.rows() < 1 || X.cols() < 1) throw std::invalid_argument("Instance: empty X");
  if (prior.d() != d()) throw std::invalid_argument("Instance: prior dimension mismatch");
  if (y.size() != X.rows()) throw std::invalid_argument("Instance: y length mismatch");
  if (!(sigma >= 0.0)) throw std::invalid_argument("Instance: sigma must be >= 0");
  if (theta_star && theta_star->size() != d())
    throw std::invalid_argument("Instance: theta_star length mismatch");
  if (xi && xi->size() != n()) throw std::invalid_argument("Instance: xi length mismatch");
  if (theta_star && xi) {
    const VectorXd rebuilt = X * (*theta_star) + (*xi);
    const double scale = std::max(1.0, y.norm());
    if ((rebuilt - y).norm() > 1e-10 * scale)
      throw std::invalid_argument("Instance: y does not equal X*theta_star + xi");
  }
}

MatrixXd gen_gaussian_matrix(int n, int d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw std::invalid_argument("gen_gaussian_matrix: n, d must be >= 1");
  RngStream rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  MatrixXd X(n, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < n; ++i) X(i, j) = scale * rng.normal();
  return X;
}

MatrixXd gen_rademacher_matrix(int n, int d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw std::invalid_argument("gen_rademacher_matrix: n, d must be >= 1");
  RngStream rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  MatrixXd X(n, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < n; ++i) X(i, j) = (rng.next_u64() >> 63) ? scale : -scale;
  return X;
}

Instance draw_instance(const PriorSpec& prior, const MatrixXd& X, double sigma,
                       std::uint64_t seed) {
  prior.validate();
  if (X.cols() != prior.d())
    throw std::invalid_argument("draw_instance: X has wrong number of columns");
  if (!(sigma >= 0.0)) throw std::invalid_argument("draw_instance: sigma must be >= 0");

  RngStream root(seed);
  RngStream support_rng = root.split();
  RngStream slab_rng = root.split();
  RngStream noise_rng = root.split();

  const int d = prior.d();
  const int n = static_cast<int>(X.rows());

  VectorXd theta = VectorXd::Zero(d);
  for (int i = 0; i < d; ++i) {
    if (support_rng.uniform_co() < prior.q[i]) {
      theta[i] = (prior.diffuse == Diffuse::GaussianN01) ? slab_rng.normal()
                                                         : slab_rng.laplace();
    }
  }

  VectorXd xi(n);
  for (int i = 0; i < n; ++i) xi[i] = sigma * noise_rng.normal();

  Instance inst;
  inst.X = X;
  inst.y = X * theta + xi;
  inst.sigma = sigma;
  inst.prior = prior;
  inst.theta_star = theta;
  inst.xi = xi;
  inst.seed = seed;
  return inst;
}

namespace {

double subset_rip_constant(const MatrixXd& gram, const std::vector<int>& idx) {
  const int s = static_cast<int>(idx.size());
  MatrixXd g(s, s);
  for (int a = 0; a < s; ++a)
    for (int b = 0; b < s; ++b) g(a, b) = gram(idx[a], idx[b]);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(g, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  const double lmax = eig.eigenvalues().maxCoeff();
  return std::max(lmax - 1.0, 1.0 - lmin);
}

}  // namespace

RipReport verify_rip(const MatrixXd& X, int s, std::uint64_t exhaustive_limit,
                     std::uint64_t sample_seed) {
  const int d = static_cast<int>(X.cols());
  if (s < 1 || s > d) throw std::invalid_argument("verify_rip: need 1 <= s <= d");

  const MatrixXd gram = X.transpose() * X;
  RipReport report;
  report.s = s;

  const std::uint64_t count = binomial_capped(d, s, exhaustive_limit);
  if (count <= exhaustive_limit) {
    // Enumerate all size-s subsets in lexicographic order.
    std::vector<int> idx(s);
    for (int i = 0; i < s; ++i) idx[i] = i;
    while (true) {
      report.eps_hat = std::max(report.eps_hat, subset_rip_constant(gram, idx));
      ++report.subsets_tested;
      int pos = s - 1;
      while (pos >= 0 && idx[pos] == d - s + pos) --pos;
      if (pos < 0) break;
      ++idx[pos];
      for (int j = pos + 1; j < s; ++j) idx[j] = idx[j - 1] + 1;
    }
    report.exhaustive = true;
    return report;
  }

  RngStream rng(sample_seed);
  std::vector<int> pool(d);
  for (int i = 0; i < d; ++i) pool[i] = i;
  for (std::uint64_t t = 0; t < exhaustive_limit; ++t) {
    // Partial Fisher-Yates for a uniform size-s subset.
    for (int i = 0; i < s; ++i) {
      const int j = i + static_cast<int>(rng.uniform_int(d - i));
      std::swap(pool[i], pool[j]);
    }
    std::vector<int> idx(pool.begin(), pool.begin() + s);
    report.eps_hat = std::max(report.eps_hat, subset_rip_constant(gram, idx));
    ++report.subsets_tested;
  }
  report.exhaustive = false;
  return report;
}

double rip_to_mi_bound(double eps, int s) {
  if (!(eps >= 0.0 && eps < 1.0))
    throw std::domain_error("rip_to_mi_bound: eps must be in [0,1)");
  if (s < 0) throw std::domain_error("rip_to_mi_bound: s must be >= 0");
  return std::sqrt(2.0 * s * eps / (1.0 - eps));
}

double noise_colip_bound(double sigma, double eps, int d, double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw std::domain_error("noise_colip_bound: delta must be in (0,1)");
  if (sigma < 0.0) throw std::domain_error("noise_colip_bound: sigma must be >= 0");
  return sigma * (1.0 + eps) * std::sqrt(2.0 * std::log(d / delta));
}

}  // namespace spikeslab
