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
#include <vector>

#include "qoda/levels.hpp"
#include "qoda/quantizer.hpp"
#include "test_support.hpp"

namespace qoda {
namespace {

const LevelSequence kHalf({0, 0.5, 1});

TEST(LocateLevelTest, Examples) {
  auto loc = locate_level(0.25, kHalf);
  EXPECT_EQ(loc.tau, 0u);
  EXPECT_DOUBLE_EQ(loc.xi, 0.5);
  loc = locate_level(0.5, kHalf);
  EXPECT_EQ(loc.tau, 1u);
  EXPECT_DOUBLE_EQ(loc.xi, 0.0);
  loc = locate_level(1.0, kHalf);
  EXPECT_EQ(loc.tau, 1u);
  EXPECT_DOUBLE_EQ(loc.xi, 1.0);
  loc = locate_level(0.0, kHalf);
  EXPECT_EQ(loc.tau, 0u);
  EXPECT_DOUBLE_EQ(loc.xi, 0.0);
}

TEST(LocateLevelTest, ToleranceAndRange) {
  EXPECT_EQ(locate_level(1.0 + 5e-13, kHalf).tau, 1u);
  EXPECT_DOUBLE_EQ(locate_level(-5e-13, kHalf).xi, 0.0);
  try {
    locate_level(1.0 + 1e-9, kHalf);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOutOfRange);
  }
  EXPECT_THROW(locate_level(-0.1, kHalf), Error);
  EXPECT_THROW(locate_level(std::nan(""), kHalf), Error);
}

TEST(QuantizeTest, ZeroVector) {
  const auto fam = LevelFamily::single(kHalf, 5);
  Rng rng(1);
  const auto qv = quantize_vector(std::vector<double>(5, 0.0), fam, rng);
  EXPECT_EQ(qv.norm, 0.0);
  for (auto j : qv.level_idx) EXPECT_EQ(j, 0u);
  for (double x : dequantize(qv, fam)) EXPECT_EQ(x, 0.0);
}

TEST(QuantizeTest, OnLevelInputsAreDeterministic) {
  // L1 norm 4, normalized magnitudes 1/4, 1/4, 1/2 all lie on uniform(3).
  const auto fam = LevelFamily::single(LevelSequence::uniform(3), 3, 1);
  const std::vector<double> v{1, -1, 2};
  Rng a(1), b(999);
  const auto qa = quantize_vector(v, fam, a);
  const auto qb = quantize_vector(v, fam, b);
  EXPECT_EQ(qa, qb);
  const auto back = dequantize(qa, fam);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_DOUBLE_EQ(back[i], v[i]);
}

TEST(QuantizeTest, LevelFrequencies) {
  const auto fam = LevelFamily::single(kHalf, 2, 2);
  const std::vector<double> v{3, 4};
  Rng rng(42);
  const int n = 100000;
  int up0 = 0, up1 = 0;
  for (int k = 0; k < n; ++k) {
    const auto qv = quantize_vector(v, fam, rng);
    EXPECT_EQ(qv.norm, 5.0);
    up0 += qv.level_idx[0] == 2;
    up1 += qv.level_idx[1] == 2;
  }
  // u = (0.6, 0.8): move up with probability 0.2 and 0.6.
  for (auto [count, p] : {std::pair{up0, 0.2}, std::pair{up1, 0.6}}) {
    const double sd = std::sqrt(p * (1 - p) / n);
    EXPECT_NEAR(static_cast<double>(count) / n, p, 3 * sd);
  }
}

TEST(QuantizeTest, Errors) {
  const auto fam = LevelFamily::single(kHalf, 3);
  Rng rng(1);
  try {
    quantize_vector(std::vector<double>{1, 2}, fam, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
  try {
    quantize_vector(std::vector<double>{1, INFINITY, 0}, fam, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFinite);
  }
  try {
    quantize_vector(std::vector<double>{1, NAN, 0}, fam, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFinite);
  }
}

TEST(DequantizeTest, Reconstruction) {
  const auto fam = LevelFamily::single(kHalf, 2);
  QuantizedVector qv{5.0, {0, 1}, {2, 1}};
  const auto out = dequantize(qv, fam);
  EXPECT_DOUBLE_EQ(out[0], 5.0);
  EXPECT_DOUBLE_EQ(out[1], -2.5);
  qv.level_idx[0] = 3;
  try {
    dequantize(qv, fam);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIndexOutOfRange);
  }
}

TEST(VarianceTest, ClosedFormExamples) {
  const auto fam = LevelFamily::single(kHalf, 2, 2);
  EXPECT_DOUBLE_EQ(exact_quantization_variance(std::vector<double>{1, 0}, fam), 0.0);
  EXPECT_NEAR(exact_quantization_variance(std::vector<double>{3, 4}, fam), 2.5, 1e-12);
}

TEST(VarianceTest, MatchesMonteCarlo) {
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t d = 8;
    const auto fam = testing::random_family(rng, 2, d, 1 + trial % 2);
    const auto v = testing::random_vector(rng, d);
    const double exact = exact_quantization_variance(v, fam);
    const int n = 100000;
    double s = 0.0, s2 = 0.0;
    for (int k = 0; k < n; ++k) {
      const auto back = dequantize(quantize_vector(v, fam, rng), fam);
      double e = 0.0;
      for (std::size_t i = 0; i < d; ++i) e += (back[i] - v[i]) * (back[i] - v[i]);
      s += e;
      s2 += e * e;
    }
    const double mean = s / n;
    const double se = std::sqrt(std::max(0.0, s2 / n - mean * mean) / n);
    EXPECT_NEAR(mean, exact, 3 * se + 1e-12 * exact) << "trial " << trial;
  }
}

TEST(QuantizeTest, Unbiased) {
  Rng rng(8);
  const std::size_t d = 16;
  const auto fam = testing::random_family(rng, 3, d, 2);
  const auto v = testing::random_vector(rng, d);
  const int n = 50000;
  std::vector<double> s(d, 0.0), s2(d, 0.0);
  for (int k = 0; k < n; ++k) {
    const auto back = dequantize(quantize_vector(v, fam, rng), fam);
    for (std::size_t i = 0; i < d; ++i) {
      s[i] += back[i];
      s2[i] += back[i] * back[i];
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    const double mean = s[i] / n;
    const double se = std::sqrt(std::max(0.0, s2[i] / n - mean * mean) / n);
    EXPECT_NEAR(mean, v[i], 4 * se + 1e-12 * std::abs(v[i]));
  }
}

TEST(QuantizeTest, SameSeedSameOutput) {
  Rng setup(9);
  const auto fam = testing::random_family(setup, 2, 32, 2);
  const auto v = testing::random_vector(setup, 32);
  Rng a(123), b(123);
  for (int k = 0; k < 20; ++k) EXPECT_EQ(quantize_vector(v, fam, a), quantize_vector(v, fam, b));
}

TEST(NormTest, MatchesDirectFormula) {
  const std::vector<double> v{3, -4, 12};
  EXPECT_DOUBLE_EQ(lq_norm(v, 1), 19.0);
  EXPECT_DOUBLE_EQ(lq_norm(v, 2), 13.0);
  EXPECT_NEAR(lq_norm(v, 3), std::cbrt(27.0 + 64.0 + 1728.0), 1e-12);
  EXPECT_DOUBLE_EQ(lq_norm(std::vector<double>{1e200, 1e200}, 2), std::sqrt(2.0) * 1e200);
}

}  // namespace
}  // namespace qoda
