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

// Distributions of normalized coordinates on [0, 1].
//
// Every quantity the codec and the level optimizer need is a linear
// functional of F against a polynomial of degree <= 2 on one interval, so a
// model only has to expose partial moments (mass, first, second) over [0, x).
// Intervals are half-open [a, b), except that the last one, ending at 1,
// also contains 1. This matches the quantizer's convention l_tau <= u <
// l_{tau+1} with u = 1 mapped to the top interval.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "qoda/error.hpp"

namespace qoda {

struct Moments {
  double mass = 0.0;
  double m1 = 0.0;  // integral of u dF
  double m2 = 0.0;  // integral of u^2 dF

  Moments operator-(const Moments& o) const {
    return {mass - o.mass, m1 - o.m1, m2 - o.m2};
  }
};

/// Weighted point masses on [0, 1].
class EmpiricalCdf {
 public:
  struct Atom {
    double value;
    double weight;
  };

  EmpiricalCdf() : EmpiricalCdf(std::vector<Atom>{{0.0, 1.0}}) {}

  explicit EmpiricalCdf(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) fail(ErrorCode::kInvalidCdf, "no atoms");
    double total = 0.0;
    for (const auto& a : atoms_) {
      if (!(a.value >= 0.0 && a.value <= 1.0) || !(a.weight >= 0.0)) {
        fail(ErrorCode::kInvalidCdf,
             "atom (" + std::to_string(a.value) + ", " +
                 std::to_string(a.weight) + ") outside [0,1] x [0,inf)");
      }
      total += a.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      fail(ErrorCode::kInvalidCdf,
           "weights sum to " + std::to_string(total) + ", expected 1");
    }
    std::stable_sort(atoms_.begin(), atoms_.end(),
                     [](const Atom& a, const Atom& b) { return a.value < b.value; });
    prefix_.resize(atoms_.size() + 1);
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      const auto& a = atoms_[i];
      prefix_[i + 1] = {prefix_[i].mass + a.weight,
                        prefix_[i].m1 + a.weight * a.value,
                        prefix_[i].m2 + a.weight * a.value * a.value};
    }
  }

  static EmpiricalCdf point_mass(double u) { return EmpiricalCdf({{u, 1.0}}); }

  /// Moments over [0, x).
  Moments below(double x) const {
    const auto it = std::lower_bound(
        atoms_.begin(), atoms_.end(), x,
        [](const Atom& a, double v) { return a.value < v; });
    return prefix_[static_cast<std::size_t>(it - atoms_.begin())];
  }

  Moments total() const { return prefix_.back(); }

  /// F(x) = mass of [0, x].
  double cdf(double x) const {
    const auto it = std::upper_bound(
        atoms_.begin(), atoms_.end(), x,
        [](double v, const Atom& a) { return v < a.value; });
    return prefix_[static_cast<std::size_t>(it - atoms_.begin())].mass;
  }

  const std::vector<Atom>& atoms() const { return atoms_; }

 private:
  std::vector<Atom> atoms_;
  std::vector<Moments> prefix_;
};

/// Uniform distribution on [0, 1].
struct UniformCdf {
  Moments below(double x) const {
    x = std::clamp(x, 0.0, 1.0);
    return {x, x * x / 2.0, x * x * x / 3.0};
  }
  Moments total() const { return below(1.0); }
  double cdf(double x) const { return std::clamp(x, 0.0, 1.0); }
};

/// Normal(mean, sd^2) conditioned on [0, 1].
class TruncatedNormalCdf {
 public:
  TruncatedNormalCdf(double mean, double sd) : mean_(mean), sd_(sd) {
    if (!(sd > 0.0) || !std::isfinite(mean) || !std::isfinite(sd)) {
      fail(ErrorCode::kInvalidCdf, "truncated normal needs finite mean, sd > 0");
    }
    z_ = raw(0.0, 1.0).mass;
    if (!(z_ > 0.0)) {
      fail(ErrorCode::kInvalidCdf, "truncated normal has no mass on [0, 1]");
    }
  }

  double mean_param() const { return mean_; }
  double sd_param() const { return sd_; }

  Moments below(double x) const {
    x = std::clamp(x, 0.0, 1.0);
    const Moments r = raw(0.0, x);
    return {r.mass / z_, r.m1 / z_, r.m2 / z_};
  }
  Moments total() const { return below(1.0); }
  double cdf(double x) const { return below(x).mass; }

  /// Mean and variance of the truncated distribution.
  std::pair<double, double> mean_var() const {
    const Moments t = total();
    return {t.m1, std::max(0.0, t.m2 - t.m1 * t.m1)};
  }

 private:
  static double phi(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  }
  // Phi(b) - Phi(a) without cancellation in either tail.
  static double normal_mass(double a, double b) {
    constexpr double kInvSqrt2 = 0.70710678118654752440;
    if (a >= 0.0) return 0.5 * (std::erfc(a * kInvSqrt2) - std::erfc(b * kInvSqrt2));
    if (b <= 0.0) return 0.5 * (std::erfc(-b * kInvSqrt2) - std::erfc(-a * kInvSqrt2));
    return 1.0 - 0.5 * std::erfc(-a * kInvSqrt2) - 0.5 * std::erfc(b * kInvSqrt2);
  }
  // Unnormalized partial moments of the untruncated normal over [x0, x1].
  Moments raw(double x0, double x1) const {
    const double a = (x0 - mean_) / sd_;
    const double b = (x1 - mean_) / sd_;
    const double p = normal_mass(a, b);
    const double dphi = phi(a) - phi(b);
    const double dzphi = a * phi(a) - b * phi(b);
    return {p, mean_ * p + sd_ * dphi,
            (mean_ * mean_ + sd_ * sd_) * p + 2.0 * mean_ * sd_ * dphi +
                sd_ * sd_ * dzphi};
  }

  double mean_;
  double sd_;
  double z_ = 1.0;
};

/// Any per-type distribution model the codec and optimizer accept.
using TypeCdf = std::variant<EmpiricalCdf, TruncatedNormalCdf, UniformCdf>;

inline Moments cdf_below(const TypeCdf& cdf, double x) {
  return std::visit([x](const auto& c) { return c.below(x); }, cdf);
}
inline Moments cdf_total(const TypeCdf& cdf) {
  return std::visit([](const auto& c) { return c.total(); }, cdf);
}

/// Moments over [a, b), or [a, 1] when b == 1.
template <typename Cdf>
Moments interval_moments(const Cdf& cdf, double a, double b) {
  const Moments hi = b >= 1.0 ? cdf.total() : cdf.below(b);
  return hi - cdf.below(a);
}

inline Moments interval_moments(const TypeCdf& cdf, double a, double b) {
  return std::visit([a, b](const auto& c) { return interval_moments(c, a, b); },
                    cdf);
}

/// Integral of (b - u)(u - a) dF over the interval with given moments.
inline double interval_variance(const Moments& m, double a, double b) {
  return std::max(0.0, -m.m2 + (a + b) * m.m1 - a * b * m.mass);
}

}  // namespace qoda
