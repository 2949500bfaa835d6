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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

namespace spikeslab {

inline constexpr double kLn2Pi = 1.8378770664093454836;  // ln(2*pi)
inline constexpr double kSqrt2 = 1.4142135623730950488;

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }
inline double norm_pdf(double x) { return std::exp(-0.5 * x * x - 0.5 * kLn2Pi); }

/// ln Phi(x), stable in the far left tail (uses the Mills-ratio expansion
/// below x = -8, direct evaluation elsewhere).
double norm_logcdf(double x);

/// ln( exp(x^2/2) * Phi(x) ). The product is the recurring "tilted orthant
/// mass" of one-sided Gaussian integrals; evaluating it jointly avoids the
/// overflow/underflow cancellation of the two factors.
double log_exp_half_sq_cdf(double x);

/// Inverse standard normal CDF (Wichura's PPND16, full double precision).
double norm_quantile(double p);

/// Regularized incomplete gamma Q(a, x) = Gamma(a,x)/Gamma(a).
double gamma_q(double a, double x);

/// Survival function of the chi-square distribution with df degrees of freedom.
inline double chi2_sf(double x, double df) { return gamma_q(0.5 * df, 0.5 * x); }

inline double logsumexp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double logsumexp(std::span<const double> v);

inline double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

inline double sigmoid(double t) {
  return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

/// C(n, k), saturating at `cap` (used to decide whether subset enumeration
/// is feasible without overflowing).
std::uint64_t binomial_capped(int n, int k, std::uint64_t cap);

inline double log_binomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace spikeslab
