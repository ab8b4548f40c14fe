// Copyright 2026 The qoda Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Unbiased stochastic layer-wise quantization.
//
// A vector v is normalized by its L^q norm, u_i = |v_i| / ||v||_q, and each
// u_i is rounded to one of the two neighbouring levels of its type's
// sequence with probabilities that preserve the mean. The result is the
// triple (||v||_q, signs, level indices).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "qoda/error.hpp"
#include "qoda/levels.hpp"

namespace qoda {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline constexpr double kUnitTolerance = 1e-12;

/// L^q norm, scaled by the max magnitude to keep large q from overflowing.
inline double lq_norm(std::span<const double> v, int q) {
  double vmax = 0.0;
  for (double x : v) vmax = std::max(vmax, std::abs(x));
  if (vmax == 0.0) return 0.0;
  double acc = 0.0;
  if (q == 1) {
    for (double x : v) acc += std::abs(x);
    return acc;
  }
  if (q == 2) {
    for (double x : v) acc += (x / vmax) * (x / vmax);
    return vmax * std::sqrt(acc);
  }
  for (double x : v) acc += std::pow(std::abs(x) / vmax, q);
  return vmax * std::pow(acc, 1.0 / q);
}

struct LevelLocation {
  std::size_t tau = 0;  // l_tau <= u < l_{tau+1}
  double xi = 0.0;      // relative position of u inside that interval
};

inline LevelLocation locate_level(double u, const LevelSequence& seq) {
  if (!(u >= -kUnitTolerance && u <= 1.0 + kUnitTolerance)) {
    fail(ErrorCode::kOutOfRange, "normalized coordinate " + std::to_string(u) +
                                     " outside [0, 1]");
  }
  u = std::clamp(u, 0.0, 1.0);
  const auto lv = seq.levels();
  if (u >= 1.0) return {seq.alpha(), 1.0};
  const auto it = std::upper_bound(lv.begin(), lv.end(), u);
  const auto tau = static_cast<std::size_t>(it - lv.begin()) - 1;
  return {tau, (u - lv[tau]) / (lv[tau + 1] - lv[tau])};
}

/// sigma_Q^2(u; l) = (l_{tau+1} - u)(u - l_tau).
inline double coordinate_variance(double u, const LevelSequence& seq) {
  const auto loc = locate_level(u, seq);
  const double lo = seq[loc.tau];
  const double hi = seq[loc.tau + 1];
  u = std::clamp(u, 0.0, 1.0);
  return (hi - u) * (u - lo);
}

struct QuantizedVector {
  double norm = 0.0;
  std::vector<std::uint8_t> negative;  // 1 where the coordinate is negative
  std::vector<std::uint32_t> level_idx;

  std::size_t dim() const { return level_idx.size(); }

  friend bool operator==(const QuantizedVector&,
                         const QuantizedVector&) = default;
};

namespace detail {

inline void check_dim(std::size_t got, const LevelFamily& family) {
  if (got != family.dim()) {
    fail(ErrorCode::kDimensionMismatch,
         "vector has dimension " + std::to_string(got) + ", family expects " +
             std::to_string(family.dim()));
  }
}

inline void check_finite(std::span<const double> v) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      fail(ErrorCode::kNonFinite, "coordinate " + std::to_string(i));
    }
  }
}

}  // namespace detail

/// Draws one uniform per coordinate regardless of its value, so that the
/// stream position after the call depends only on the dimension.
inline QuantizedVector quantize_vector(std::span<const double> v,
                                       const LevelFamily& family, Rng& rng) {
  detail::check_dim(v.size(), family);
  detail::check_finite(v);
  QuantizedVector out;
  out.negative.assign(v.size(), 0);
  out.level_idx.assign(v.size(), 0);
  out.norm = lq_norm(v, family.norm_order());
  if (!std::isfinite(out.norm)) fail(ErrorCode::kNonFinite, "norm overflow");
  if (out.norm == 0.0) return out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& seq = family.sequence(family.type_of(i));
    const double u = std::min(std::abs(v[i]) / out.norm, 1.0);
    const auto loc = locate_level(u, seq);
    const double draw = uniform01(rng);
    const auto idx = draw < loc.xi ? loc.tau + 1 : loc.tau;
    out.level_idx[i] = static_cast<std::uint32_t>(idx);
    // Level 0 carries no sign on the wire; keep it canonical (+).
    out.negative[i] = (idx > 0 && v[i] < 0.0) ? 1 : 0;
  }
  return out;
}

inline std::vector<double> dequantize(const QuantizedVector& qv,
                                      const LevelFamily& family) {
  detail::check_dim(qv.dim(), family);
  std::vector<double> out(qv.dim(), 0.0);
  if (qv.norm == 0.0) return out;
  for (std::size_t i = 0; i < qv.dim(); ++i) {
    const auto& seq = family.sequence(family.type_of(i));
    if (qv.level_idx[i] >= seq.size()) {
      fail(ErrorCode::kIndexOutOfRange,
           "level index " + std::to_string(qv.level_idx[i]) +
               " at coordinate " + std::to_string(i));
    }
    const double mag = qv.norm * seq[qv.level_idx[i]];
    out[i] = qv.negative[i] ? -mag : mag;
  }
  return out;
}

/// Closed-form E||Q(v) - v||_2^2.
inline double exact_quantization_variance(std::span<const double> v,
                                          const LevelFamily& family) {
  detail::check_dim(v.size(), family);
  const double norm = lq_norm(v, family.norm_order());
  if (norm == 0.0) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double u = std::min(std::abs(v[i]) / norm, 1.0);
    acc += coordinate_variance(u, family.sequence(family.type_of(i)));
  }
  return norm * norm * acc;
}

}  // namespace qoda
