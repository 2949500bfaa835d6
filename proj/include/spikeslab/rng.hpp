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

#include <bit>
#include <cmath>
#include <cstdint>

namespace spikeslab {

double norm_quantile(double p);  // math.hpp

/// Splittable counter-based generator (SplitMix64 with the golden-gamma
/// stream-splitting scheme of Steele, Lea and Flood). Every draw path in the
/// library takes an explicit RngStream; independent streams are obtained with
/// split(), never by sharing, so parallel generation stays reproducible:
///
///   RngStream root(seed);
///   RngStream worker = root.split();   // advances root, worker independent
///
/// All continuous draws consume exactly one 64-bit word per variate (normals
/// go through the inverse CDF), so a stream's output is a pure function of
/// (seed, gamma, draw index).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(seed), gamma_(kGoldenGamma) {}
  RngStream(std::uint64_t state, std::uint64_t gamma) : state_(state), gamma_(gamma) {}

  std::uint64_t next_u64() { return mix64(state_ += gamma_); }

  RngStream split() {
    const std::uint64_t s = next_u64();
    const std::uint64_t g = next_u64();
    return RngStream(mix64(s), mix_gamma(g));
  }

  /// Derive the i-th child stream without disturbing this stream's state.
  RngStream child(std::uint64_t i) const {
    RngStream c(mix64(state_ ^ mix64(i + 0x9e3779b97f4a7c15ULL)), gamma_);
    return c.split();
  }

  /// Uniform on the open interval (0, 1); never returns an endpoint.
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  /// Uniform on [0, 1).
  double uniform_co() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n) {
    // Lemire's multiply-and-shift rejection.
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      const std::uint64_t t = (0 - n) % n;
      while (lo < t) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  double normal() { return norm_quantile(uniform()); }
  double exponential() { return -std::log(uniform()); }

  double laplace() {
    const double u = uniform();
    return u < 0.5 ? std::log(2.0 * u) : -std::log(2.0 * (1.0 - u));
  }

  bool bernoulli(double p) { return uniform_co() < p; }

 private:
  static constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t mix_gamma(std::uint64_t z) {
    z = (z ^ (z >> 33)) * 0xff51afd7ed558ccdULL;
    z = (z ^ (z >> 33)) * 0xc4ceb9fe1a85ec53ULL;
    z = (z ^ (z >> 33)) | 1ULL;
    const int n = std::popcount(z ^ (z >> 1));
    return (n < 24) ? z ^ 0xaaaaaaaaaaaaaaaaULL : z;
  }

  std::uint64_t state_;
  std::uint64_t gamma_;
};

}  // namespace spikeslab
