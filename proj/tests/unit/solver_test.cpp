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

#include "qoda/solver.hpp"

namespace qoda {
namespace {

SolverConfig base_config(std::size_t d = 8, std::size_t K = 2, bool quantize = true) {
  SolverConfig cfg;
  cfg.problem = make_problem(ProblemKind::kBilinear, d, K, 5);
  cfg.noise = {NoiseKind::kAbsolute, 0.1, 0.0};
  cfg.compression.enabled = quantize;
  cfg.compression.family = LevelFamily::single(LevelSequence::uniform(6), d);
  cfg.T = 200;
  cfg.seed = 11;
  return cfg;
}

TEST(RatesTest, Examples) {
  EXPECT_DOUBLE_EQ(rates_general({}).gamma, 1.0);
  const auto g = rates_general({3.0, 100.0, 100.0});
  EXPECT_DOUBLE_EQ(g.gamma, 0.5);
  EXPECT_DOUBLE_EQ(g.eta, 0.5);
  const auto a = rates_alt({100.0, 3.0, 5.0}, 0.25);
  EXPECT_NEAR(a.gamma, std::pow(4.0, -0.25), 1e-15);
  EXPECT_NEAR(a.eta, 1.0 / 3.0, 1e-15);
  const auto b = rates_alt({0.0, 15.0, 0.0}, 0.25);
  EXPECT_NEAR(b.gamma, 0.5, 1e-15);
  EXPECT_NEAR(b.eta, 0.25, 1e-15);
  for (double q : {0.0, -0.1, 0.3}) {
    try {
      rates_alt({}, q);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kBadQHat);
    }
  }
  Schedule s{ScheduleKind::kAlt, 0.3, 0.1};
  EXPECT_THROW(s.validate(), Error);
}

TEST(RatesTest, AltEtaNeverExceedsGamma) {
  Rng rng(1);
  for (int k = 0; k < 10000; ++k) {
    const RateAccumulators acc{0.0, std::exp(20 * uniform01(rng) - 10),
                               uniform01(rng) < 0.2 ? 0.0 : std::exp(20 * uniform01(rng) - 10)};
    const double q = std::max(1e-6, 0.25 * uniform01(rng));
    const auto r = rates_alt(acc, q);
    EXPECT_LE(r.eta, r.gamma);
  }
}

TEST(SolverTest, FirstHalfStepIsStartingPoint) {
  auto cfg = base_config();
  cfg.x1 = Vec::Constant(8, 0.3);
  Solver s(cfg);
  s.step();
  EXPECT_EQ(s.x_half(), *cfg.x1);
  EXPECT_EQ(s.oracle_calls_per_node(), 1u);
}

TEST(SolverTest, FirstStepBitsMatchIndependentEncoding) {
  auto cfg = base_config();
  cfg.noise = {};
  cfg.x1 = Vec::LinSpaced(8, -1.0, 1.0);
  Solver s(cfg);
  s.step();
  const auto& fam = cfg.compression.family;
  std::vector<std::vector<double>> rows{estimate_level_probs(UniformCdf{}, fam.sequence(0))};
  const LevelHistogram hist(rows);
  const auto books = build_codebook(fam, hist, Protocol::kMain, Scheme::kHuffman);
  std::uint64_t bits = 0;
  for (std::size_t k = 0; k < 2; ++k) {
    Rng rng = detail::derive_stream(cfg.seed, k, detail::kQuantStream);
    const Vec v = cfg.problem.op.apply_node(k, *cfg.x1);
    const auto qv = quantize_vector(std::span<const double>(v.data(), 8), fam, rng);
    bits += encode(qv, books, fam).bit_length;
  }
  EXPECT_EQ(s.bits(), bits);
}

TEST(SolverTest, IdentityCodecCounts64BitsPerCoordinate) {
  auto cfg = base_config(8, 3, false);
  Solver s(cfg);
  for (int t = 0; t < 5; ++t) s.step();
  EXPECT_EQ(s.bits(), 5u * 3u * 64u * 8u);
}

TEST(SolverTest, DualAveragingIdentity) {
  auto cfg = base_config();
  cfg.x1 = Vec::Constant(8, -0.2);
  Solver s(cfg);
  Vec y = Vec::Zero(8);
  RateAccumulators prev;
  for (int t = 0; t < 300; ++t) {
    s.step();
    Vec m = Vec::Zero(8);
    for (const auto& v : s.stored_messages()) m += v;
    y -= m / 2.0;
    EXPECT_LT((s.y() - y).norm(), 1e-10);
    EXPECT_LT((s.x() - (*cfg.x1 + s.eta_current() * s.y())).norm(), 1e-12);
    const auto& acc = s.accumulators();
    EXPECT_GE(acc.s_diff, prev.s_diff);
    EXPECT_GE(acc.s_norm, prev.s_norm);
    EXPECT_GE(acc.s_move, prev.s_move);
    prev = acc;
  }
  EXPECT_EQ(s.oracle_calls_per_node(), 300u);
}

TEST(SolverTest, GapShrinksWithoutCompression) {
  auto cfg = base_config(2, 1, false);
  ProblemOptions o;
  o.canonical = true;
  cfg.problem = make_problem(ProblemKind::kBilinear, 2, 1, 1, o);
  cfg.noise = {};
  cfg.schedule = {ScheduleKind::kConstant, 0.25, 0.1};
  cfg.x1 = Vec{{1.0, 1.0}};
  cfg.T = 10000;
  cfg.checkpoints = {100, 10000};
  const auto m = run(cfg);
  ASSERT_EQ(m.rows.size(), 2u);
  EXPECT_LT(m.rows[1].gap, m.rows[0].gap);
  EXPECT_GE(m.rows[1].gap, 0.0);
}

TEST(SolverTest, EmptyRun) {
  auto cfg = base_config();
  cfg.T = 0;
  const auto m = run(cfg);
  EXPECT_TRUE(m.rows.empty());
  EXPECT_FALSE(m.averaged.has_value());
  EXPECT_TRUE(std::isnan(m.summary.final_gap));
  EXPECT_EQ(m.summary.total_bits, 0u);
}

TEST(SolverTest, Deterministic) {
  auto cfg = base_config();
  cfg.compression.adapt.enabled = true;
  cfg.compression.adapt.period = 50;
  const auto a = run(cfg);
  const auto b = run(cfg);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].gap, b.rows[i].gap);
    EXPECT_EQ(a.rows[i].bits, b.rows[i].bits);
  }
  cfg.seed = 12;
  EXPECT_NE(run(cfg).summary.total_bits, a.summary.total_bits);
}

TEST(SolverTest, ExtragradientUsesTwoCallsPerStep) {
  auto cfg = base_config();
  cfg.method = Method::kExtragradient;
  cfg.noise = {};
  cfg.T = 2000;
  cfg.checkpoints = {20, 2000};
  const auto m = run(cfg);
  EXPECT_EQ(m.summary.oracle_calls_per_node, 4000u);
  EXPECT_LT(m.rows[1].gap, m.rows[0].gap);
  cfg.method = Method::kQoda;
  EXPECT_EQ(run(cfg).summary.oracle_calls_per_node, 2000u);
}

TEST(ChannelTest, UpdatesOnlyOnSchedule) {
  auto cfg = base_config();
  cfg.compression.adapt.enabled = true;
  cfg.compression.adapt.period = 5;
  Channel ch(cfg.compression, 8, 2, 1);
  EXPECT_FALSE(ch.maybe_update(1));  // nothing recorded yet
  Rng rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int z = 0; z < 6; ++z) {
    Vec v(8);
    for (int i = 0; i < 8; ++i) v(i) = n(rng) * (i < 4 ? 0.1 : 1.0);
    ch.record(z % 2, v);
  }
  const auto before = ch.family();
  EXPECT_FALSE(ch.maybe_update(3));
  EXPECT_EQ(ch.family(), before);
  EXPECT_EQ(ch.segments().size(), 1u);
  EXPECT_TRUE(ch.maybe_update(6));
  ASSERT_EQ(ch.segments().size(), 2u);
  EXPECT_EQ(ch.segments()[0].length, 5u);
  EXPECT_EQ(ch.segments()[1].start, 6u);
  EXPECT_LE(ch.segments()[1].mqv_after, ch.segments()[1].mqv_before + 1e-15);
  EXPECT_EQ(ch.family().sequence(0).alpha(), 6u);
  EXPECT_EQ(ch.recent_samples().size(), 6u);
}

TEST(ChannelTest, SampleBufferKeepsMostRecent) {
  auto cfg = base_config();
  cfg.compression.adapt.enabled = true;
  cfg.compression.adapt.samples = 3;
  Channel ch(cfg.compression, 8, 1, 1);
  for (int z = 0; z < 10; ++z) ch.record(0, Vec::Constant(8, z));
  const auto s = ch.recent_samples();
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s.front()[0], 7.0);
  EXPECT_EQ(s.back()[0], 9.0);
}

TEST(ChannelTest, SegmentsCoverTheRun) {
  auto cfg = base_config();
  cfg.compression.adapt.enabled = true;
  cfg.compression.adapt.period = 30;
  cfg.T = 200;
  const auto m = run(cfg);
  std::size_t total = 0;
  for (const auto& seg : m.segments) {
    total += seg.length;
    if (!std::isnan(seg.mqv_before)) {
      EXPECT_LE(seg.mqv_after, seg.mqv_before + 1e-15);
    }
  }
  EXPECT_EQ(total, 200u);
  EXPECT_GT(m.segments.size(), 1u);
  EXPECT_GT(m.summary.eps_bar, 0.0);
  EXPECT_GT(m.summary.n_bar, 0.0);
}

TEST(SlopeTest, SyntheticPowerLaw) {
  std::vector<MetricRow> rows;
  for (std::size_t t = 1; t <= 4096; t *= 2) rows.push_back({t, 3.0 / std::sqrt(double(t))});
  EXPECT_NEAR(fit_loglog_slope(rows, 1, 4096), -0.5, 1e-12);
  EXPECT_NEAR(fit_loglog_slope(rows, 64, 4096), -0.5, 1e-12);
  EXPECT_TRUE(std::isnan(fit_loglog_slope(rows, 5000, 6000)));
  const auto cp = default_checkpoints(10);
  EXPECT_EQ(cp, (std::vector<std::size_t>{1, 2, 4, 8, 10}));
}

}  // namespace
}  // namespace qoda
