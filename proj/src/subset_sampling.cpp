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

#include <vector>

namespace spikeslab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Linear-space F values are exact and cheapest, but only safe while the
// table cannot overflow: F(1,j) <= C(d,j) * max_odds^j.
bool linear_mode_ok(const VectorXd& log_odds, int k) {
  double max_lo = -kInf;
  for (int i = 0; i < log_odds.size(); ++i) max_lo = std::max(max_lo, log_odds[i]);
  if (max_lo > std::log(1e3)) return false;
  const int d = static_cast<int>(log_odds.size());
  const double log_bound = log_binomial(d, std::min(k, d / 2)) + k * std::max(max_lo, 0.0);
  return log_bound < 500.0;  // comfortably below double overflow
}

}  // namespace

DpTable DpTable::build(const VectorXd& p, int k) {
  const int d = static_cast<int>(p.size());
  if (k < 0 || k > d) throw std::domain_error("DpTable: need 0 <= k <= d");
  VectorXd log_odds(d);
  for (int i = 0; i < d; ++i) {
    if (p[i] < 0.0) throw std::domain_error("DpTable: p[" + std::to_string(i + 1) + "] < 0");
    if (p[i] >= 1.0)
      throw std::domain_error("DpTable: p[" + std::to_string(i + 1) +
                              "] >= 1 (encode forced inclusions upstream)");
    log_odds[i] = (p[i] == 0.0) ? -kInf : std::log(p[i]) - std::log1p(-p[i]);
  }
  DpTable t;
  t.log_odds_ = std::move(log_odds);
  t.p_ = p;
  t.k_ = k;
  t.log_mode_ = !linear_mode_ok(t.log_odds_, k);
  t.fill();
  return t;
}

DpTable DpTable::build_from_log_odds(const VectorXd& log_odds, int k) {
  const int d = static_cast<int>(log_odds.size());
  if (k < 0 || k > d) throw std::domain_error("DpTable: need 0 <= k <= d");
  for (int i = 0; i < d; ++i) {
    if (std::isnan(log_odds[i]) || log_odds[i] == kInf)
      throw std::domain_error("DpTable: log odds must be finite or -inf");
  }
  DpTable t;
  t.log_odds_ = log_odds;
  t.p_ = VectorXd(d);
  for (int i = 0; i < d; ++i) t.p_[i] = sigmoid(log_odds[i]);
  t.k_ = k;
  t.log_mode_ = !linear_mode_ok(log_odds, k);
  t.fill();
  return t;
}

void DpTable::fill() {
  const int d = DpTable::d();
  F_.resize(d + 1, k_ + 1);
  if (log_mode_) {
    F_.row(d).setConstant(-kInf);
    F_(d, 0) = 0.0;
    for (int i = d - 1; i >= 0; --i) {
      F_(i, 0) = 0.0;
      for (int j = 1; j <= k_; ++j)
        F_(i, j) = logsumexp(F_(i + 1, j), log_odds_[i] + F_(i + 1, j - 1));
    }
  } else {
    F_.row(d).setZero();
    F_(d, 0) = 1.0;
    for (int i = d - 1; i >= 0; --i) {
      F_(i, 0) = 1.0;
      const double odds = std::exp(log_odds_[i]);  // exp(-inf) = 0
      for (int j = 1; j <= k_; ++j) F_(i, j) = F_(i + 1, j) + odds * F_(i + 1, j - 1);
    }
  }
}

SupportSet DpTable::sample(RngStream& rng) const {
  const int d = DpTable::d();

  // Phase 1: draw the success count ell proportionally to F(1, ell).
  std::vector<double> logw(k_ + 1);
  for (int j = 0; j <= k_; ++j) logw[j] = log_value(1, j);
  const double logz = logsumexp(std::span<const double>(logw));
  int ell = k_;
  double u = rng.uniform();
  double acc = 0.0;
  for (int j = 0; j <= k_; ++j) {
    acc += std::exp(logw[j] - logz);
    if (u <= acc) {
      ell = j;
      break;
    }
  }

  // Phase 2: sequential Bernoulli selection with the exact conditional
  // inclusion probability p_i F(i+1, r-1) / ((1-p_i) F(i, r)).
  std::vector<int> out;
  out.reserve(ell);
  int r = ell;
  for (int i = 1; i <= d && r > 0; ++i) {
    const double log_take = log_odds_[i - 1] + log_value(i + 1, r - 1) - log_value(i, r);
    if (std::log(rng.uniform()) < log_take) {
      out.push_back(i - 1);
      --r;
    }
  }
  return SupportSet(std::move(out));
}

double DpTable::log_pmf(const SupportSet& s) const {
  if (s.size() > k_) return -kInf;
  double log_num = 0.0;
  for (int i : s.indices()) {
    if (i >= d()) throw std::domain_error("DpTable::pmf: index out of range");
    log_num += log_odds_[i];
  }
  std::vector<double> logw(k_ + 1);
  for (int j = 0; j <= k_; ++j) logw[j] = log_value(1, j);
  return log_num - logsumexp(std::span<const double>(logw));
}

double DpTable::pmf(const SupportSet& s) const { return std::exp(log_pmf(s)); }

}  // namespace spikeslab
