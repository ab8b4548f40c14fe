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

// Adaptive level placement.
//
// From Z sampled dual vectors we build, per type, the distribution of
// normalized coordinates where sample z is weighted by
// lambda_z = ||g_z||_q^2 / sum ||g||_q^2, and then choose each type's levels
// to minimize the expected rounding variance against that distribution.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "qoda/distribution.hpp"
#include "qoda/error.hpp"
#include "qoda/levels.hpp"
#include "qoda/quantizer.hpp"

namespace qoda {

using Sample = std::vector<double>;

struct WeightedCdf {
  std::vector<double> weights;      // lambda_z, one per sample
  std::vector<EmpiricalCdf> types;  // one per type

  std::vector<TypeCdf> models() const {
    return std::vector<TypeCdf>(types.begin(), types.end());
  }
};

/// Per-type lambda-weighted empirical distribution of normalized coordinates.
/// Each coordinate of sample z carries weight lambda_z / |U^m|, so every
/// type's distribution has unit mass. Unused types get a point mass at 0.
inline WeightedCdf weighted_cdf(std::span<const Sample> samples,
                                const LevelFamily& family) {
  if (samples.empty()) fail(ErrorCode::kAllZeroSamples, "no samples");
  const int q = family.norm_order();
  std::vector<double> norms(samples.size());
  double total = 0.0;
  for (std::size_t z = 0; z < samples.size(); ++z) {
    detail::check_dim(samples[z].size(), family);
    detail::check_finite(samples[z]);
    norms[z] = lq_norm(samples[z], q);
    total += norms[z] * norms[z];
  }
  if (!(total > 0.0)) fail(ErrorCode::kAllZeroSamples, "every sample has zero norm");

  WeightedCdf out;
  out.weights.resize(samples.size());
  for (std::size_t z = 0; z < samples.size(); ++z) {
    out.weights[z] = norms[z] * norms[z] / total;
  }
  std::vector<std::vector<EmpiricalCdf::Atom>> atoms(family.num_types());
  for (std::size_t z = 0; z < samples.size(); ++z) {
    if (norms[z] == 0.0) continue;
    for (std::size_t i = 0; i < family.dim(); ++i) {
      const std::size_t m = family.type_of(i);
      const double u = std::min(std::abs(samples[z][i]) / norms[z], 1.0);
      atoms[m].push_back(
          {u, out.weights[z] / static_cast<double>(family.count(m))});
    }
  }
  for (std::size_t m = 0; m < family.num_types(); ++m) {
    if (atoms[m].empty()) {
      out.types.push_back(EmpiricalCdf::point_mass(0.0));
      continue;
    }
    // Renormalize away the rounding of the weight sums.
    double s = 0.0;
    for (const auto& a : atoms[m]) s += a.weight;
    for (auto& a : atoms[m]) a.weight /= s;
    out.types.emplace_back(std::move(atoms[m]));
  }
  return out;
}

/// Mixture sum_m mu^m F^m of the per-type distributions.
inline EmpiricalCdf pooled_cdf(const WeightedCdf& cdf, const LevelFamily& family) {
  std::vector<EmpiricalCdf::Atom> atoms;
  for (std::size_t m = 0; m < cdf.types.size(); ++m) {
    const double mu = family.proportion(m);
    if (mu == 0.0) continue;
    for (const auto& a : cdf.types[m].atoms()) atoms.push_back({a.value, mu * a.weight});
  }
  double s = 0.0;
  for (const auto& a : atoms) s += a.weight;
  for (auto& a : atoms) a.weight /= s;
  return EmpiricalCdf(std::move(atoms));
}

struct TruncNormalFit {
  struct Type {
    double mean = 0.5;  // parameters of the underlying normal
    double sd = 1.0;
    bool degenerate = false;  // fell back to a step at `point`
    double point = 0.0;
  };
  std::vector<Type> types;

  bool any_degenerate() const {
    return std::any_of(types.begin(), types.end(),
                       [](const Type& t) { return t.degenerate; });
  }

  std::vector<TypeCdf> models() const {
    std::vector<TypeCdf> out;
    for (const auto& t : types) {
      if (t.degenerate) {
        out.emplace_back(EmpiricalCdf::point_mass(t.point));
      } else {
        out.emplace_back(TruncatedNormalCdf(t.mean, t.sd));
      }
    }
    return out;
  }
};

namespace detail {

// Keeps the normal's center within 8 sd (and 0.5) of [0, 1], which keeps
// the truncation mass well away from underflow.
inline void project_params(double& mean, double& log_sd) {
  log_sd = std::clamp(log_sd, std::log(1e-4), std::log(10.0));
  const double slack = std::min(0.5, 8.0 * std::exp(log_sd));
  mean = std::clamp(mean, -slack, 1.0 + slack);
}

inline std::array<double, 2> moment_residual(double mean, double log_sd,
                                             double target_mean, double target_var) {
  const auto [m, v] = TruncatedNormalCdf(mean, std::exp(log_sd)).mean_var();
  const double scale = std::sqrt(target_var);
  return {(m - target_mean) / scale, (v - target_var) / target_var};
}

// Unreachable targets: match the mean exactly and take the spread whose
// variance comes closest, scanning log sd and bisecting on the center.
inline TruncNormalFit::Type match_mean_first(double target_mean, double target_var) {
  TruncNormalFit::Type best{target_mean, 1.0, false, 0.0};
  double best_err = std::numeric_limits<double>::infinity();
  const double lo_s = std::log(1e-4), hi_s = std::log(10.0);
  constexpr int kSteps = 400;
  for (int i = 0; i <= kSteps; ++i) {
    const double log_sd = lo_s + (hi_s - lo_s) * i / kSteps;
    const double sd = std::exp(log_sd);
    const double slack = std::min(0.5, 8.0 * sd);
    double a = -slack, b = 1.0 + slack;
    auto mean_at = [sd](double mu) { return TruncatedNormalCdf(mu, sd).mean_var().first; };
    if (mean_at(a) > target_mean || mean_at(b) < target_mean) continue;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (a + b);
      (mean_at(mid) < target_mean ? a : b) = mid;
    }
    const double mu = 0.5 * (a + b);
    const double err = std::abs(TruncatedNormalCdf(mu, sd).mean_var().second - target_var);
    if (err < best_err) {
      best_err = err;
      best = {mu, sd, false, 0.0};
    }
  }
  return best;
}

/// Damped Newton on (mean, log sd) matching mean and variance of the
/// truncated normal. Returns the best parameters found; exact matching is
/// impossible when the target variance exceeds what [0,1] allows.
inline TruncNormalFit::Type match_moments(double target_mean, double target_var) {
  double mean = target_mean;
  double log_sd = 0.5 * std::log(target_var);
  project_params(mean, log_sd);
  auto r = moment_residual(mean, log_sd, target_mean, target_var);
  auto norm2 = [](const std::array<double, 2>& x) { return x[0] * x[0] + x[1] * x[1]; };
  for (int it = 0; it < 200 && norm2(r) > 1e-24; ++it) {
    constexpr double h = 1e-7;
    const auto rm = moment_residual(mean + h, log_sd, target_mean, target_var);
    const auto rs = moment_residual(mean, log_sd + h, target_mean, target_var);
    const double j00 = (rm[0] - r[0]) / h, j01 = (rs[0] - r[0]) / h;
    const double j10 = (rm[1] - r[1]) / h, j11 = (rs[1] - r[1]) / h;
    const double det = j00 * j11 - j01 * j10;
    if (!(std::abs(det) > 1e-300)) break;
    const double dm = -(j11 * r[0] - j01 * r[1]) / det;
    const double ds = -(-j10 * r[0] + j00 * r[1]) / det;
    double step = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 40; ++ls, step *= 0.5) {
      double nm = mean + step * dm;
      double ns = log_sd + step * ds;
      project_params(nm, ns);
      const auto nr = moment_residual(nm, ns, target_mean, target_var);
      if (norm2(nr) < norm2(r)) {
        mean = nm;
        log_sd = ns;
        r = nr;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  if (norm2(r) > 1e-12) return match_mean_first(target_mean, target_var);
  return {mean, std::exp(log_sd), false, 0.0};
}

}  // namespace detail

/// Method-of-moments fit of a [0,1]-truncated normal per type. Types whose
/// weighted values are all (nearly) identical fall back to a step CDF and
/// are flagged degenerate.
inline TruncNormalFit fit_truncated_normal(std::span<const Sample> samples,
                                           const LevelFamily& family) {
  const WeightedCdf cdf = weighted_cdf(samples, family);
  TruncNormalFit fit;
  for (const auto& type : cdf.types) {
    const Moments t = type.total();
    const double mean = t.m1;
    const double var = std::max(0.0, t.m2 - t.m1 * t.m1);
    const auto& atoms = type.atoms();
    const auto [lo, hi] = std::minmax_element(
        atoms.begin(), atoms.end(),
        [](const auto& a, const auto& b) { return a.value < b.value; });
    if (hi->value - lo->value <= 1e-12 || var <= 1e-14) {
      fit.types.push_back({mean, 0.0, true, mean});
      continue;
    }
    fit.types.push_back(detail::match_moments(mean, var));
  }
  return fit;
}

struct OptimizedLevels {
  LevelSequence levels;
  double objective = 0.0;  // integral of sigma_Q^2 dF at the optimum
};

inline constexpr std::size_t kDefaultGrid = 512;

/// Exactly `alpha` interior levels on the grid {1/G, ..., (G-1)/G}
/// minimizing the expected rounding variance, by dynamic programming over
/// (levels used, position of the last level).
template <typename Cdf>
OptimizedLevels optimize_levels(const Cdf& cdf, std::size_t alpha,
                                std::size_t grid = kDefaultGrid) {
  if (grid < 1 || alpha + 1 > grid) {
    fail(ErrorCode::kBudgetTooLarge, std::to_string(alpha) +
                                         " interior levels do not fit a grid of " +
                                         std::to_string(grid));
  }
  const std::size_t G = grid;
  auto point = [G](std::size_t k) {
    return k == G ? 1.0 : static_cast<double>(k) / static_cast<double>(G);
  };
  std::vector<Moments> cum(G + 1);
  for (std::size_t k = 0; k < G; ++k) cum[k] = cdf.below(point(k));
  cum[G] = cdf.total();
  auto cost = [&](std::size_t i, std::size_t j) {
    return interval_variance(cum[j] - cum[i], point(i), point(j));
  };

  if (alpha == 0) {
    return {LevelSequence({0.0, 1.0}), cost(0, G)};
  }
  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  // best[c][j]: min cost of [0, point(j)) using c interior levels, the c-th at j.
  std::vector<std::vector<double>> best(alpha + 1, std::vector<double>(G + 1, kInf));
  std::vector<std::vector<std::size_t>> from(alpha + 1,
                                             std::vector<std::size_t>(G + 1, kNone));
  best[0][0] = 0.0;
  for (std::size_t c = 1; c <= alpha; ++c) {
    const std::size_t first_prev = c == 1 ? 0 : c - 1;
    for (std::size_t j = c; j + (alpha - c) < G; ++j) {
      const std::size_t last_prev = c == 1 ? 0 : j - 1;
      for (std::size_t i = first_prev; i <= last_prev; ++i) {
        if (best[c - 1][i] == kInf) continue;
        const double v = best[c - 1][i] + cost(i, j);
        if (v < best[c][j]) {
          best[c][j] = v;
          from[c][j] = i;
        }
      }
    }
  }
  double best_total = kInf;
  std::size_t last = kNone;
  for (std::size_t j = alpha; j < G; ++j) {
    if (best[alpha][j] == kInf) continue;
    const double v = best[alpha][j] + cost(j, G);
    if (v < best_total) {
      best_total = v;
      last = j;
    }
  }
  std::vector<double> levels(alpha + 2);
  levels.front() = 0.0;
  levels.back() = 1.0;
  std::size_t j = last;
  for (std::size_t c = alpha; c >= 1; --c) {
    levels[c] = point(j);
    j = from[c][j];
  }
  return {LevelSequence(std::move(levels)), best_total};
}

inline OptimizedLevels optimize_levels(const TypeCdf& cdf, std::size_t alpha,
                                       std::size_t grid = kDefaultGrid) {
  return std::visit([&](const auto& c) { return optimize_levels(c, alpha, grid); },
                    cdf);
}

/// Expected rounding variance of `seq` against one type's distribution.
inline double type_objective(const TypeCdf& cdf, const LevelSequence& seq) {
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < seq.size(); ++j) {
    acc += interval_variance(interval_moments(cdf, seq[j], seq[j + 1]), seq[j], seq[j + 1]);
  }
  return acc;
}

/// Per-coordinate MQV value: sum over types of mu^m times the type's
/// expected rounding variance.
inline double mqv_objective(const LevelFamily& family, std::span<const TypeCdf> models) {
  if (models.size() != family.num_types()) {
    fail(ErrorCode::kBadFamily, "one distribution per type is required");
  }
  double acc = 0.0;
  for (std::size_t m = 0; m < family.num_types(); ++m) {
    acc += family.proportion(m) * type_objective(models[m], family.sequence(m));
  }
  return acc;
}

inline double mqv_objective(const LevelFamily& family, const WeightedCdf& cdf) {
  const auto models = cdf.models();
  return mqv_objective(family, models);
}

/// Re-optimizes every type independently with its own interior budget.
inline LevelFamily optimize_family(const LevelFamily& family,
                                   std::span<const TypeCdf> models,
                                   std::span<const std::size_t> budgets,
                                   std::size_t grid = kDefaultGrid) {
  if (models.size() != family.num_types() || budgets.size() != family.num_types()) {
    fail(ErrorCode::kBadFamily, "one distribution and budget per type is required");
  }
  std::vector<LevelSequence> seqs;
  for (std::size_t m = 0; m < family.num_types(); ++m) {
    seqs.push_back(optimize_levels(models[m], budgets[m], grid).levels);
  }
  return family.with_sequences(std::move(seqs));
}

}  // namespace qoda
