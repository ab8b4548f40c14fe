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

// Synthetic affine monotone problems split over K nodes, with noisy oracles
// and the restricted gap on a Euclidean ball.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "qoda/error.hpp"
#include "qoda/quantizer.hpp"

namespace qoda {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct AffineOperator {
  Mat B;
  Vec c;

  Vec apply(const Vec& x) const { return B * x + c; }
};

inline double spectral_norm(const Mat& B) {
  if (B.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(B);
  return svd.singularValues()(0);
}

/// A(x) = Bx + c, optionally split as the mean of K node operators.
/// Construction checks monotonicity (B + B^T PSD) and L >= ||B||_2.
class OperatorSpec {
 public:
  OperatorSpec() = default;

  OperatorSpec(AffineOperator mean, std::vector<AffineOperator> nodes, double lipschitz,
               std::optional<double> cocoercivity = std::nullopt)
      : mean_(std::move(mean)),
        nodes_(std::move(nodes)),
        lipschitz_(lipschitz),
        beta_(cocoercivity) {
    const auto d = mean_.B.rows();
    if (d == 0 || mean_.B.cols() != d || mean_.c.size() != d) {
      fail(ErrorCode::kBadDimension, "operator must be square with matching offset");
    }
    if (nodes_.empty()) nodes_.push_back(mean_);
    for (const auto& n : nodes_) {
      if (n.B.rows() != d || n.B.cols() != d || n.c.size() != d) {
        fail(ErrorCode::kBadDimension, "node operator dimension mismatch");
      }
    }
    const Mat sym = 0.5 * (mean_.B + mean_.B.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> eig(sym, Eigen::EigenvaluesOnly);
    const double norm = spectral_norm(mean_.B);
    if (eig.eigenvalues().minCoeff() < -1e-9 * std::max(1.0, norm)) {
      fail(ErrorCode::kNotMonotone, "symmetric part has a negative eigenvalue");
    }
    if (lipschitz_ < norm * (1.0 - 1e-9)) {
      fail(ErrorCode::kBadConstant, "declared Lipschitz constant below ||B||_2");
    }
    if (beta_ && !(*beta_ > 0.0)) {
      fail(ErrorCode::kBadConstant, "co-coercivity constant must be positive");
    }
  }

  std::size_t dim() const { return static_cast<std::size_t>(mean_.B.rows()); }
  std::size_t num_nodes() const { return nodes_.size(); }
  const AffineOperator& mean() const { return mean_; }
  const AffineOperator& node(std::size_t k) const { return nodes_[k]; }
  double lipschitz() const { return lipschitz_; }
  std::optional<double> cocoercivity() const { return beta_; }

  Vec apply(const Vec& x) const {
    check(x);
    return mean_.apply(x);
  }
  Vec apply_node(std::size_t k, const Vec& x) const {
    check(x);
    return nodes_[k].apply(x);
  }

  /// True when B is skew-symmetric up to rounding, i.e. <Bx, x> = 0.
  bool skew() const {
    const Mat sym = 0.5 * (mean_.B + mean_.B.transpose());
    return sym.norm() <= 1e-12 * std::max(1.0, mean_.B.norm());
  }

 private:
  void check(const Vec& x) const {
    if (static_cast<std::size_t>(x.size()) != dim()) {
      fail(ErrorCode::kDimensionMismatch, "point has dimension " +
                                              std::to_string(x.size()) +
                                              ", operator " + std::to_string(dim()));
    }
  }

  AffineOperator mean_;
  std::vector<AffineOperator> nodes_;
  double lipschitz_ = 0.0;
  std::optional<double> beta_;
};

enum class NoiseKind { kNone, kAbsolute, kRelative };

/// Absolute: E||U||^2 = sigma^2. Relative: ||U||^2 = sigma_R ||A(x)||^2 with
/// a uniformly random direction. A positive `clip` rescales any sample whose
/// norm exceeds it back onto the ball of that radius.
struct NoiseModel {
  NoiseKind kind = NoiseKind::kNone;
  double level = 0.0;  // sigma (absolute) or sigma_R (relative)
  double clip = 0.0;   // J; 0 disables clipping

  void validate() const {
    if (!(level >= 0.0)) fail(ErrorCode::kBadConstant, "noise level must be >= 0");
    if (!(clip >= 0.0)) fail(ErrorCode::kBadConstant, "clip radius must be > 0");
  }
};

/// g(x; w) = A_k(x) + U_k(x; w) for node k.
inline Vec sample_oracle(const OperatorSpec& op, std::size_t node, const NoiseModel& noise,
                         const Vec& x, Rng& rng) {
  Vec g = op.apply_node(node, x);
  const auto d = g.size();
  std::normal_distribution<double> normal(0.0, 1.0);
  switch (noise.kind) {
    case NoiseKind::kNone:
      break;
    case NoiseKind::kAbsolute: {
      if (noise.level > 0.0) {
        const double sd = noise.level / std::sqrt(static_cast<double>(d));
        for (Eigen::Index i = 0; i < d; ++i) g(i) += sd * normal(rng);
      }
      break;
    }
    case NoiseKind::kRelative: {
      const double scale = std::sqrt(noise.level) * op.apply(x).norm();
      if (scale > 0.0) {
        Vec eta(d);
        for (Eigen::Index i = 0; i < d; ++i) eta(i) = normal(rng);
        const double n = eta.norm();
        if (n > 0.0) g += (scale / n) * eta;
      }
      break;
    }
  }
  if (noise.clip > 0.0) {
    const double n = g.norm();
    if (n > noise.clip) g *= noise.clip / n;
  }
  return g;
}

/// Euclidean ball test domain.
struct TestDomain {
  Vec center;
  double radius = 1.0;

  /// sup over the domain of ||x1 - p||^2.
  double diameter_sq_from(const Vec& x1) const {
    const double r = (x1 - center).norm() + radius;
    return r * r;
  }
};

/// Ball of radius 2||x1 - x*|| (1 if x1 = x*) centered at x*.
inline TestDomain default_domain(const Vec& x_star, const Vec& x1) {
  const double dist = (x1 - x_star).norm();
  return {x_star, dist > 0.0 ? 2.0 * dist : 1.0};
}

enum class GapMethod { kAuto, kClosedForm, kTrustRegion, kAscent };

struct GapResult {
  double value = 0.0;
  bool converged = true;
  GapMethod method = GapMethod::kAuto;
};

struct AscentOptions {
  double tolerance = 1e-6;  // on the projected-gradient residual
  std::size_t max_iterations = 200000;
  std::size_t restarts = 3;
  std::uint64_t seed = 0x5eed;
};

namespace detail {

// GAP(x^) = f(p0) + max_{||z|| <= r} h.z - z.S z with
// f(x) = <Bx + c, x^ - x>, S = sym(B), h = B^T (x^ - p0) - (B p0 + c).
struct GapPieces {
  double base;
  Vec h;
  Mat S;
};

inline GapPieces gap_pieces(const Vec& xhat, const AffineOperator& A, const TestDomain& dom) {
  const Vec a0 = A.apply(dom.center);
  return {a0.dot(xhat - dom.center), A.B.transpose() * (xhat - dom.center) - a0,
          0.5 * (A.B + A.B.transpose())};
}

inline double ball_trust_region(const Vec& h, const Mat& S, double r) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(S);
  const Vec lam = eig.eigenvalues().cwiseMax(0.0);
  const Vec ht = eig.eigenvectors().transpose() * h;
  const double lam_max = lam.maxCoeff();
  const double zero_tol = 1e-12 * std::max(1.0, lam_max);
  const double h_tol = 1e-14 * std::max(1.0, h.norm());
  auto value_at = [&](double nu) {
    double v = 0.0;
    double z2 = 0.0;
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
      const double denom = 2.0 * (lam(i) + nu);
      if (denom <= 0.0) continue;
      const double zi = ht(i) / denom;
      v += ht(i) * zi - lam(i) * zi * zi;
      z2 += zi * zi;
    }
    return std::pair{v, std::sqrt(z2)};
  };
  bool interior = true;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam(i) <= zero_tol && std::abs(ht(i)) > h_tol) interior = false;
  }
  if (interior) {
    // Flat directions with no linear term do not move the optimum.
    double v = 0.0, z2 = 0.0;
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
      if (lam(i) <= zero_tol) continue;
      const double zi = ht(i) / (2.0 * lam(i));
      v += ht(i) * zi - lam(i) * zi * zi;
      z2 += zi * zi;
    }
    if (std::sqrt(z2) <= r) return v;
  }
  // ||z(nu)|| is decreasing in nu; find the root of ||z(nu)|| = r.
  double lo = 0.0;
  double hi = h.norm() / (2.0 * r) + 1.0;
  while (value_at(hi).second > r) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (value_at(mid).second > r) lo = mid; else hi = mid;
  }
  return value_at(hi).first;
}

inline double ball_ascent(const Vec& h, const Mat& S, double r, const AscentOptions& opt,
                          bool& converged) {
  const auto d = h.size();
  Eigen::SelfAdjointEigenSolver<Mat> eig(S, Eigen::EigenvaluesOnly);
  const double lg = std::max(2.0 * eig.eigenvalues().maxCoeff(),
                             h.norm() / r + 1e-12);
  auto project = [r](Vec z) {
    const double n = z.norm();
    if (n > r) z *= r / n;
    return z;
  };
  auto objective = [&](const Vec& z) { return h.dot(z) - z.dot(S * z); };
  Rng rng(opt.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double best = -std::numeric_limits<double>::infinity();
  converged = false;
  for (std::size_t restart = 0; restart <= opt.restarts; ++restart) {
    Vec z = Vec::Zero(d);
    if (restart > 0) {
      for (Eigen::Index i = 0; i < d; ++i) z(i) = normal(rng);
      z = project(z * (r / std::max(z.norm(), 1e-300)) * uniform01(rng));
    }
    Vec y = z;
    double t = 1.0;
    bool done = false;
    for (std::size_t it = 0; it < opt.max_iterations; ++it) {
      const Vec grad = h - 2.0 * (S * y);
      const Vec next = project(y + grad / lg);
      const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      Vec y_next = next + ((t - 1.0) / tn) * (next - z);
      // Restart momentum when it stops helping.
      if (objective(next) < objective(z)) {
        y_next = next;
        t = 1.0;
      } else {
        t = tn;
      }
      const Vec g_next = h - 2.0 * (S * next);
      const double residual = (next - project(next + g_next / lg)).norm() * lg;
      z = next;
      y = y_next;
      if (residual <= opt.tolerance * 1e-3 * (1.0 + h.norm())) {
        done = true;
        break;
      }
    }
    converged = converged || done;
    best = std::max(best, objective(z));
  }
  return best;
}

}  // namespace detail

/// sup over the ball of <A(x), x^ - x>. Skew operators use the linear
/// closed form; other monotone operators give a concave quadratic on the
/// ball, solved exactly through the eigen-decomposition of sym(B) (the
/// kTrustRegion path) or by accelerated projected-gradient ascent with
/// restarts (kAscent), which reports a lower bound when not converged.
inline GapResult restricted_gap(const Vec& xhat, const OperatorSpec& op, const TestDomain& dom,
                                GapMethod method = GapMethod::kAuto,
                                const AscentOptions& ascent = {}) {
  if (static_cast<std::size_t>(xhat.size()) != op.dim()) {
    fail(ErrorCode::kDimensionMismatch, "gap point dimension mismatch");
  }
  if (!xhat.allFinite()) fail(ErrorCode::kNonFinite, "gap point is not finite");
  const auto pieces = detail::gap_pieces(xhat, op.mean(), dom);
  if (method == GapMethod::kAuto) {
    method = op.skew() ? GapMethod::kClosedForm : GapMethod::kTrustRegion;
  }
  GapResult res;
  res.method = method;
  switch (method) {
    case GapMethod::kClosedForm:
      if (!op.skew()) fail(ErrorCode::kNotMonotone, "closed form needs a skew operator");
      res.value = pieces.base + dom.radius * pieces.h.norm();
      break;
    case GapMethod::kTrustRegion:
      res.value = pieces.base + detail::ball_trust_region(pieces.h, pieces.S, dom.radius);
      break;
    case GapMethod::kAscent:
    case GapMethod::kAuto:
      res.value = pieces.base + detail::ball_ascent(pieces.h, pieces.S, dom.radius, ascent,
                                                    res.converged);
      break;
  }
  return res;
}

enum class ProblemKind { kBilinear, kStronglyMonotone, kCocoercive };

struct ProblemOptions {
  double mu = 0.1;                  // strongly monotone modulus
  double spectrum_lo = 0.1;         // co-coercive eigenvalue range
  double spectrum_hi = 1.0;
  double heterogeneity = 0.0;       // node perturbation scale; 0 = identical nodes
  bool zero_solution = false;       // x* = 0 (c = 0) instead of a random unit x*
  bool canonical = false;           // d = 2 bilinear with B = [[0,1],[-1,0]]
};

struct ProblemInstance {
  ProblemKind kind = ProblemKind::kBilinear;
  OperatorSpec op;
  Vec x_star;
};

namespace detail {

inline Mat random_orthogonal(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ();
  const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

}  // namespace detail

/// Test-problem factory.
///   bilinear:          B = [[0, M], [-M^T, 0]], singular values of M in [0.5, 1]
///   strongly_monotone: B = mu I + S, S skew with ||S||_2 = 1
///   cocoercive:        B = Q diag(lambda) Q^T, lambda evenly spread over
///                      [spectrum_lo, spectrum_hi]; beta = 1 / lambda_max
/// With K > 1 and positive heterogeneity, node k gets A + Delta_k where the
/// affine perturbations Delta_k sum to zero.
inline ProblemInstance make_problem(ProblemKind kind, std::size_t d, std::size_t K,
                                    std::uint64_t seed, const ProblemOptions& opt = {}) {
  if (d == 0) fail(ErrorCode::kBadDimension, "dimension must be positive");
  if (K == 0) fail(ErrorCode::kBadDimension, "need at least one node");
  if (kind == ProblemKind::kBilinear && d % 2 != 0) {
    fail(ErrorCode::kBadDimension, "bilinear problems need an even dimension");
  }
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(d);
  Mat B = Mat::Zero(n, n);
  std::optional<double> beta;
  switch (kind) {
    case ProblemKind::kBilinear: {
      const Eigen::Index h = n / 2;
      Mat M(h, h);
      if (opt.canonical && d == 2) {
        M(0, 0) = 1.0;
      } else {
        Vec s(h);
        for (Eigen::Index i = 0; i < h; ++i) s(i) = 0.5 + 0.5 * unif(rng);
        s(0) = 1.0;
        M = detail::random_orthogonal(h, rng) * s.asDiagonal() *
            detail::random_orthogonal(h, rng).transpose();
      }
      B.topRightCorner(h, h) = M;
      B.bottomLeftCorner(h, h) = -M.transpose();
      break;
    }
    case ProblemKind::kStronglyMonotone: {
      if (!(opt.mu > 0.0)) fail(ErrorCode::kBadConstant, "mu must be positive");
      Mat G(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) G(i, j) = normal(rng);
      }
      Mat S = 0.5 * (G - G.transpose());
      const double sn = spectral_norm(S);
      if (sn > 0.0) S /= sn;
      B = opt.mu * Mat::Identity(n, n) + S;
      break;
    }
    case ProblemKind::kCocoercive: {
      if (!(opt.spectrum_lo >= 0.0) || !(opt.spectrum_hi > 0.0) ||
          opt.spectrum_lo > opt.spectrum_hi) {
        fail(ErrorCode::kBadConstant, "co-coercive spectrum must satisfy 0 <= lo <= hi, hi > 0");
      }
      Vec lam(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        lam(i) = n == 1 ? opt.spectrum_hi
                        : opt.spectrum_lo + (opt.spectrum_hi - opt.spectrum_lo) *
                                                static_cast<double>(i) /
                                                static_cast<double>(n - 1);
      }
      if (opt.spectrum_lo == opt.spectrum_hi) {
        B = opt.spectrum_hi * Mat::Identity(n, n);
      } else {
        const Mat Q = detail::random_orthogonal(n, rng);
        B = Q * lam.asDiagonal() * Q.transpose();
        B = 0.5 * (B + B.transpose());
      }
      beta = 1.0 / opt.spectrum_hi;
      break;
    }
  }

  Vec x_star = Vec::Zero(n);
  if (!opt.zero_solution && !opt.canonical) {
    for (Eigen::Index i = 0; i < n; ++i) x_star(i) = normal(rng);
    x_star /= x_star.norm();
  }
  AffineOperator mean{B, -(B * x_star)};

  std::vector<AffineOperator> nodes(K, mean);
  if (K > 1 && opt.heterogeneity > 0.0) {
    const double scale = opt.heterogeneity / std::sqrt(static_cast<double>(d));
    Mat dsum = Mat::Zero(n, n);
    Vec esum = Vec::Zero(n);
    for (std::size_t k = 0; k + 1 < K; ++k) {
      Mat D(n, n);
      Vec e(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        e(i) = opt.heterogeneity * normal(rng) / std::sqrt(static_cast<double>(d));
        for (Eigen::Index j = 0; j < n; ++j) D(i, j) = scale * normal(rng);
      }
      nodes[k].B += D;
      nodes[k].c += e;
      dsum += D;
      esum += e;
    }
    nodes[K - 1].B -= dsum;
    nodes[K - 1].c -= esum;
  }
  const double L = spectral_norm(B);
  return {kind, OperatorSpec(std::move(mean), std::move(nodes), L, beta), std::move(x_star)};
}

}  // namespace qoda
