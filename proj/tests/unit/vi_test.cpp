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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "qoda/vi.hpp"

namespace qoda {
namespace {

Mat rot() {
  Mat B(2, 2);
  B << 0, 1, -1, 0;
  return B;
}

OperatorSpec skew2() { return OperatorSpec({rot(), Vec::Zero(2)}, {}, 1.0); }

Vec random_vec(Rng& rng, Eigen::Index d, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Vec v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = n(rng);
  return v;
}

TEST(OperatorTest, ApplyExample) {
  const auto op = skew2();
  const Vec y = op.apply(Vec{{1.0, 2.0}});
  EXPECT_DOUBLE_EQ(y(0), 2.0);
  EXPECT_DOUBLE_EQ(y(1), -1.0);
  EXPECT_TRUE(op.skew());
  try {
    op.apply_node(0, Vec::Zero(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(OperatorTest, ValidatesConstants) {
  try {
    OperatorSpec({-Mat::Identity(2, 2), Vec::Zero(2)}, {}, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotMonotone);
  }
  try {
    OperatorSpec({2.0 * Mat::Identity(2, 2), Vec::Zero(2)}, {}, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBadConstant);
  }
  try {
    OperatorSpec({Mat::Identity(2, 3), Vec::Zero(2)}, {}, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBadDimension);
  }
}

TEST(OracleTest, NoiselessIsExact) {
  Rng rng(1);
  const auto op = skew2();
  const Vec x{{0.3, -0.7}};
  for (auto kind : {NoiseKind::kNone, NoiseKind::kAbsolute, NoiseKind::kRelative}) {
    const Vec g = sample_oracle(op, 0, {kind, 0.0, 0.0}, x, rng);
    EXPECT_EQ(g, op.apply(x));
  }
}

TEST(OracleTest, RelativeNoiseVanishesAtSolution) {
  Rng rng(2);
  const auto p = make_problem(ProblemKind::kCocoercive, 6, 1, 3);
  const Vec g = sample_oracle(p.op, 0, {NoiseKind::kRelative, 0.5, 0.0}, p.x_star, rng);
  EXPECT_LT(g.norm(), 1e-12);
  const Vec x = p.x_star + Vec::Ones(6);
  const Vec ax = p.op.apply(x);
  for (int k = 0; k < 20; ++k) {
    const Vec u = sample_oracle(p.op, 0, {NoiseKind::kRelative, 0.5, 0.0}, x, rng) - ax;
    EXPECT_NEAR(u.squaredNorm(), 0.5 * ax.squaredNorm(), 1e-9);
  }
}

TEST(OracleTest, AbsoluteNoiseVariance) {
  Rng rng(3);
  const auto p = make_problem(ProblemKind::kBilinear, 10, 1, 4);
  const Vec x = Vec::Ones(10);
  const Vec ax = p.op.apply(x);
  double acc = 0.0;
  Vec mean = Vec::Zero(10);
  const int n = 20000;
  for (int k = 0; k < n; ++k) {
    const Vec u = sample_oracle(p.op, 0, {NoiseKind::kAbsolute, 1.0, 0.0}, x, rng) - ax;
    acc += u.squaredNorm();
    mean += u;
  }
  EXPECT_GE(acc / n, 0.97);
  EXPECT_LE(acc / n, 1.03);
  EXPECT_LT((mean / n).norm(), 0.05);
}

TEST(OracleTest, ClipBoundsNorm) {
  Rng rng(4);
  const auto op = skew2();
  for (int k = 0; k < 100; ++k) {
    const Vec g = sample_oracle(op, 0, {NoiseKind::kAbsolute, 10.0, 2.0}, Vec{{5.0, 5.0}}, rng);
    EXPECT_LE(g.norm(), 2.0 + 1e-12);
  }
  const Vec small = sample_oracle(op, 0, {NoiseKind::kNone, 0.0, 2.0}, Vec{{0.1, 0.0}}, rng);
  EXPECT_EQ(small, op.apply(Vec{{0.1, 0.0}}));
}

// Oracle: max over a dense polar grid of the ball of <A(x), xhat - x>.
double grid_gap(const Vec& xhat, const OperatorSpec& op, const TestDomain& dom) {
  double best = -1e300;
  const int nr = 400, na = 720;
  for (int i = 0; i <= nr; ++i) {
    const double rad = dom.radius * i / nr;
    for (int j = 0; j < na; ++j) {
      const double t = 2 * std::numbers::pi * j / na;
      const Vec x = dom.center + rad * Vec{{std::cos(t), std::sin(t)}};
      best = std::max(best, op.apply(x).dot(xhat - x));
    }
  }
  return best;
}

TEST(GapTest, CanonicalExamples) {
  const auto op = skew2();
  const TestDomain dom{Vec::Zero(2), 1.0};
  EXPECT_NEAR(restricted_gap(Vec::Zero(2), op, dom).value, 0.0, 1e-15);
  const Vec xhat{{0.5, 0.0}};
  const auto r = restricted_gap(xhat, op, dom);
  EXPECT_EQ(r.method, GapMethod::kClosedForm);
  EXPECT_NEAR(r.value, 0.5, 1e-12);
  EXPECT_NEAR(grid_gap(xhat, op, dom), 0.5, 1e-4);
}

TEST(GapTest, MatchesGridOracleInTwoDimensions) {
  Rng rng(5);
  for (int trial = 0; trial < 6; ++trial) {
    Mat B(2, 2);
    const double u = uniform01(rng);
    B << 0.3 + uniform01(rng), u, -u, 0.5 + 0.2 * uniform01(rng);
    const OperatorSpec op({B, random_vec(rng, 2)}, {}, spectral_norm(B));
    const TestDomain dom{random_vec(rng, 2), 0.5 + uniform01(rng)};
    const Vec xhat = random_vec(rng, 2);
    const double oracle = grid_gap(xhat, op, dom);
    const double tr = restricted_gap(xhat, op, dom, GapMethod::kTrustRegion).value;
    EXPECT_GE(tr, oracle - 1e-9);
    EXPECT_NEAR(tr, oracle, 1e-3);
  }
}

TEST(GapTest, NonNegativeWhenDomainContainsSolution) {
  Rng rng(6);
  for (auto kind : {ProblemKind::kBilinear, ProblemKind::kStronglyMonotone,
                    ProblemKind::kCocoercive}) {
    const auto p = make_problem(kind, 8, 1, 7);
    for (int k = 0; k < 20; ++k) {
      const Vec xhat = p.x_star + random_vec(rng, 8, 0.5);
      const TestDomain dom{p.x_star + random_vec(rng, 8, 0.1), 1.0};
      EXPECT_GE(restricted_gap(xhat, p.op, dom).value, -1e-12);
    }
  }
}

TEST(GapTest, ExactMethodsAgreeWithAscent) {
  Rng rng(8);
  for (auto kind : {ProblemKind::kBilinear, ProblemKind::kStronglyMonotone,
                    ProblemKind::kCocoercive}) {
    const auto p = make_problem(kind, 10, 1, 9);
    for (int k = 0; k < 5; ++k) {
      const Vec xhat = p.x_star + random_vec(rng, 10, 0.3);
      const auto dom = default_domain(p.x_star, p.x_star + random_vec(rng, 10));
      const auto exact = restricted_gap(xhat, p.op, dom);
      const auto asc = restricted_gap(xhat, p.op, dom, GapMethod::kAscent);
      EXPECT_TRUE(asc.converged);
      EXPECT_NEAR(exact.value, asc.value, 1e-5);
      EXPECT_GE(exact.value, asc.value - 1e-9);
      if (kind == ProblemKind::kBilinear) {
        EXPECT_EQ(exact.method, GapMethod::kClosedForm);
        EXPECT_NEAR(exact.value,
                    restricted_gap(xhat, p.op, dom, GapMethod::kTrustRegion).value, 1e-9);
      }
    }
  }
}

TEST(GapTest, SamplingNeverExceedsExactValue) {
  Rng rng(9);
  const auto p = make_problem(ProblemKind::kCocoercive, 5, 1, 10);
  const Vec xhat = p.x_star + random_vec(rng, 5);
  const TestDomain dom{p.x_star, 1.5};
  const double exact = restricted_gap(xhat, p.op, dom).value;
  for (int k = 0; k < 5000; ++k) {
    Vec z = random_vec(rng, 5);
    z *= dom.radius * std::pow(uniform01(rng), 0.2) / z.norm();
    const Vec x = dom.center + z;
    EXPECT_LE(p.op.apply(x).dot(xhat - x), exact + 1e-9);
  }
}

TEST(ProblemTest, IdentityCocoercive) {
  ProblemOptions o;
  o.spectrum_lo = o.spectrum_hi = 1.0;
  const auto p = make_problem(ProblemKind::kCocoercive, 4, 1, 1, o);
  EXPECT_TRUE(p.op.mean().B.isApprox(Mat::Identity(4, 4)));
  ASSERT_TRUE(p.op.cocoercivity().has_value());
  EXPECT_DOUBLE_EQ(*p.op.cocoercivity(), 1.0);
  EXPECT_NEAR(p.op.lipschitz(), 1.0, 1e-12);
}

TEST(ProblemTest, CanonicalBilinear) {
  ProblemOptions o;
  o.canonical = true;
  const auto p = make_problem(ProblemKind::kBilinear, 2, 1, 1, o);
  EXPECT_EQ(p.x_star, Vec::Zero(2));
  EXPECT_TRUE(p.op.mean().B.isApprox(rot()));
  EXPECT_EQ(p.op.mean().c, Vec::Zero(2));
}

TEST(ProblemTest, CertifiedConstants) {
  Rng rng(11);
  for (auto kind : {ProblemKind::kBilinear, ProblemKind::kStronglyMonotone,
                    ProblemKind::kCocoercive}) {
    const auto p = make_problem(kind, 12, 1, 12);
    const auto& op = p.op;
    EXPECT_LT(op.apply(p.x_star).norm(), 1e-12);
    EXPECT_NEAR(p.x_star.norm(), 1.0, 1e-12);
    for (int k = 0; k < 10000; ++k) {
      const Vec x = random_vec(rng, 12), y = random_vec(rng, 12);
      const Vec da = op.apply(x) - op.apply(y);
      const double inner = da.dot(x - y);
      EXPECT_GE(inner, -1e-12);
      EXPECT_LE(da.norm(), op.lipschitz() * (x - y).norm() * (1 + 1e-12));
      if (kind == ProblemKind::kStronglyMonotone) {
        EXPECT_GE(inner, 0.1 * (x - y).squaredNorm() * (1 - 1e-9));
      }
      if (op.cocoercivity()) {
        EXPECT_GE(inner, *op.cocoercivity() * da.squaredNorm() * (1 - 1e-9));
      }
      if (HasFailure()) return;
    }
  }
}

TEST(ProblemTest, BilinearSpectrum) {
  const auto p = make_problem(ProblemKind::kBilinear, 10, 1, 2);
  EXPECT_TRUE(p.op.skew());
  EXPECT_NEAR(p.op.lipschitz(), 1.0, 1e-12);
  Eigen::JacobiSVD<Mat> svd(p.op.mean().B.topRightCorner(5, 5));
  EXPECT_GE(svd.singularValues().minCoeff(), 0.5 - 1e-12);
}

TEST(ProblemTest, RejectsBadShapes) {
  for (auto [kind, d, K] : {std::tuple{ProblemKind::kBilinear, 3u, 1u},
                            std::tuple{ProblemKind::kCocoercive, 0u, 1u},
                            std::tuple{ProblemKind::kCocoercive, 4u, 0u}}) {
    try {
      make_problem(kind, d, K, 1);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kBadDimension);
    }
  }
}

TEST(ProblemTest, NodesAverageToMean) {
  ProblemOptions o;
  o.heterogeneity = 0.3;
  const auto p = make_problem(ProblemKind::kBilinear, 8, 5, 3, o);
  ASSERT_EQ(p.op.num_nodes(), 5u);
  Mat bsum = Mat::Zero(8, 8);
  Vec csum = Vec::Zero(8);
  for (std::size_t k = 0; k < 5; ++k) {
    bsum += p.op.node(k).B;
    csum += p.op.node(k).c;
  }
  EXPECT_TRUE((bsum / 5).isApprox(p.op.mean().B, 1e-12));
  EXPECT_LT((csum / 5 - p.op.mean().c).norm(), 1e-12);
  EXPECT_GT((p.op.node(0).B - p.op.mean().B).norm(), 0.0);
}

TEST(ProblemTest, Deterministic) {
  const auto a = make_problem(ProblemKind::kStronglyMonotone, 6, 2, 42);
  const auto b = make_problem(ProblemKind::kStronglyMonotone, 6, 2, 42);
  EXPECT_EQ(a.op.mean().B, b.op.mean().B);
  EXPECT_EQ(a.x_star, b.x_star);
}

}  // namespace
}  // namespace qoda
