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

// Quantized optimistic dual averaging over K simulated nodes, plus a
// quantized extragradient baseline sharing the same message pipeline.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "qoda/adapt.hpp"
#include "qoda/codec.hpp"
#include "qoda/distribution.hpp"
#include "qoda/error.hpp"
#include "qoda/levels.hpp"
#include "qoda/quantizer.hpp"
#include "qoda/vi.hpp"

namespace qoda {

enum class ScheduleKind { kGeneral, kAlt, kConstant };

struct Schedule {
  ScheduleKind kind = ScheduleKind::kGeneral;
  double q_hat = 0.25;    // Alt only
  double constant = 0.1;  // Constant only

  void validate() const {
    if (kind == ScheduleKind::kAlt && !(q_hat > 0.0 && q_hat <= 0.25)) {
      fail(ErrorCode::kBadQHat, "q_hat must lie in (0, 1/4], got " + std::to_string(q_hat));
    }
    if (kind == ScheduleKind::kConstant && !(constant > 0.0)) {
      fail(ErrorCode::kBadConstant, "constant rate must be positive");
    }
  }
};

/// Running sums over decoded half-step messages.
///   s_diff = sum_s sum_k ||V^_{k,s+1/2} - V^_{k,s-1/2}||^2 / K^2
///   s_norm = sum_s sum_k ||V^_{k,s+1/2}||^2 / K^2
///   s_move = sum_s ||X_s - X_{s+1}||^2
struct RateAccumulators {
  double s_diff = 0.0;
  double s_norm = 0.0;
  double s_move = 0.0;
};

struct Rates {
  double gamma = 1.0;
  double eta = 1.0;
};

inline Rates rates_general(const RateAccumulators& acc) {
  const double r = 1.0 / std::sqrt(1.0 + acc.s_diff);
  return {r, r};
}

inline Rates rates_alt(const RateAccumulators& acc, double q_hat) {
  if (!(q_hat > 0.0 && q_hat <= 0.25)) {
    fail(ErrorCode::kBadQHat, "q_hat must lie in (0, 1/4], got " + std::to_string(q_hat));
  }
  return {std::pow(1.0 + acc.s_norm, q_hat - 0.5),
          1.0 / std::sqrt(1.0 + acc.s_norm + acc.s_move)};
}

enum class LevelEstimator { kEmpirical, kTruncatedNormal };

struct AdaptiveLevels {
  bool enabled = false;
  std::vector<std::size_t> budgets;  // interior levels per type; empty = keep current
  std::size_t period = 1000;         // R: updates at t = 1, 1 + R, 1 + 2R, ...
  std::size_t samples = 16;          // recent dual vectors kept per node
  std::size_t grid = kDefaultGrid;
  LevelEstimator estimator = LevelEstimator::kEmpirical;
};

struct CompressionConfig {
  bool enabled = true;  // false: identity codec, 64 bits per coordinate
  LevelFamily family;
  Protocol protocol = Protocol::kMain;
  Scheme scheme = Scheme::kHuffman;
  AdaptiveLevels adapt;
};

enum class Method { kQoda, kExtragradient };

struct SolverConfig {
  ProblemInstance problem;
  NoiseModel noise;
  CompressionConfig compression;
  Schedule schedule;
  Method method = Method::kQoda;
  std::size_t T = 1000;
  std::uint64_t seed = 1;
  std::optional<Vec> x1;                 // origin when unset
  std::vector<std::size_t> checkpoints;  // powers of two plus T when empty
  double slope_from = 0.0;               // fit window start; T / 100 when 0
};

/// One stretch of iterations run with a fixed family and codebook.
struct Segment {
  std::size_t start = 1;
  std::size_t length = 0;
  double eps_q = 0.0;
  double n_q = 0.0;  // expected code-length bound, bits per message
  double mqv_before = std::numeric_limits<double>::quiet_NaN();
  double mqv_after = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

enum StreamPurpose : std::uint32_t { kNoiseStream = 1, kQuantStream = 2 };

inline Rng derive_stream(std::uint64_t seed, std::uint64_t node, std::uint32_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(node), purpose};
  return Rng(seq);
}

inline LevelHistogram histogram_under(const LevelFamily& family,
                                      std::span<const TypeCdf> models) {
  std::vector<std::vector<double>> rows;
  for (std::size_t m = 0; m < family.num_types(); ++m) {
    rows.push_back(estimate_level_probs(models[m], family.sequence(m)));
  }
  return LevelHistogram(std::move(rows));
}

}  // namespace detail

/// The compressed link between nodes. Owns the level family with its
/// codebook, plus the per-node sample buffers used for level updates.
class Channel {
 public:
  Channel(const CompressionConfig& cfg, std::size_t d, std::size_t K, std::uint64_t seed)
      : cfg_(cfg), d_(d), buffers_(K) {
    for (std::size_t k = 0; k < K; ++k) {
      rngs_.push_back(detail::derive_stream(seed, k, detail::kQuantStream));
    }
    if (cfg_.enabled) {
      if (cfg_.family.dim() != d_) {
        fail(ErrorCode::kDimensionMismatch, "level family covers " +
                                                std::to_string(cfg_.family.dim()) +
                                                " coordinates, problem has " +
                                                std::to_string(d_));
      }
      family_ = cfg_.family;
      const std::vector<TypeCdf> flat(family_.num_types(), TypeCdf{UniformCdf{}});
      hist_ = detail::histogram_under(family_, flat);
      books_ = build_codebook(family_, hist_, cfg_.protocol, cfg_.scheme);
      if (cfg_.adapt.enabled) {
        budgets_ = cfg_.adapt.budgets;
        if (budgets_.empty()) {
          for (const auto& s : family_.sequences()) budgets_.push_back(s.alpha());
        }
        if (budgets_.size() != family_.num_types()) {
          fail(ErrorCode::kBadFamily, "one budget per type is required");
        }
        if (cfg_.adapt.period == 0 || cfg_.adapt.samples == 0) {
          fail(ErrorCode::kBadConstant, "update period and sample count must be positive");
        }
      }
    }
    open_segment(1);
  }

  Vec transmit(std::size_t k, const Vec& v) {
    if (!cfg_.enabled) {
      bits_ += 64ull * d_;
      return v;
    }
    const auto qv = quantize_vector(std::span<const double>(v.data(), d_), family_, rngs_[k]);
    const auto msg = encode(qv, books_, family_);
    bits_ += msg.bit_length;
    const auto out = dequantize(decode(msg, books_, family_, d_), family_);
    return Eigen::Map<const Vec>(out.data(), static_cast<Eigen::Index>(d_));
  }

  void record(std::size_t k, const Vec& v) {
    if (!cfg_.enabled || !cfg_.adapt.enabled) return;
    auto& buf = buffers_[k];
    buf.emplace_back(v.data(), v.data() + v.size());
    if (buf.size() > cfg_.adapt.samples) buf.pop_front();
  }

  /// Runs a level update when t is in the update set. Returns true when the
  /// family changed hands (a new segment starts at t).
  bool maybe_update(std::size_t t) {
    if (!cfg_.enabled || !cfg_.adapt.enabled) return false;
    if ((t - 1) % cfg_.adapt.period != 0) return false;
    auto samples = recent_samples();
    if (samples.empty()) return false;
    std::vector<TypeCdf> models;
    try {
      if (cfg_.adapt.estimator == LevelEstimator::kEmpirical) {
        models = weighted_cdf(samples, family_).models();
      } else {
        models = fit_truncated_normal(samples, family_).models();
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kAllZeroSamples) return false;
      throw;
    }
    std::vector<LevelSequence> seqs;
    for (std::size_t m = 0; m < family_.num_types(); ++m) {
      auto fresh = optimize_levels(models[m], budgets_[m], cfg_.adapt.grid).levels;
      // The grid may not contain the current levels; never trade down.
      const auto& old = family_.sequence(m);
      if (old.alpha() == budgets_[m] &&
          type_objective(models[m], old) <= type_objective(models[m], fresh)) {
        fresh = old;
      }
      seqs.push_back(std::move(fresh));
    }
    const double before = mqv_objective(family_, models);
    family_ = family_.with_sequences(std::move(seqs));
    hist_ = detail::histogram_under(family_, models);
    books_ = build_codebook(family_, hist_, cfg_.protocol, cfg_.scheme);
    if (t > segments_.back().start) {
      segments_.back().length = t - segments_.back().start;
      open_segment(t);
    } else {
      refresh_segment();
    }
    segments_.back().mqv_before = before;
    segments_.back().mqv_after = mqv_objective(family_, models);
    last_estimation_ = std::move(models);
    return true;
  }

  void finish(std::size_t T) {
    auto& s = segments_.back();
    s.length = T + 1 > s.start ? T + 1 - s.start : 0;
  }

  std::vector<Sample> recent_samples() const {
    std::vector<Sample> out;
    for (const auto& buf : buffers_) out.insert(out.end(), buf.begin(), buf.end());
    return out;
  }

  bool enabled() const { return cfg_.enabled; }
  const LevelFamily& family() const { return family_; }
  const Codebook& books() const { return books_; }
  const LevelHistogram& histogram() const { return hist_; }
  std::uint64_t bits() const { return bits_; }
  const std::vector<Segment>& segments() const { return segments_; }
  double current_eps() const { return segments_.back().eps_q; }
  const std::vector<TypeCdf>& last_estimation() const { return last_estimation_; }

 private:
  void open_segment(std::size_t t) {
    segments_.push_back({});
    segments_.back().start = t;
    refresh_segment();
  }

  void refresh_segment() {
    auto& s = segments_.back();
    if (!cfg_.enabled) {
      s.eps_q = 0.0;
      s.n_q = 64.0 * static_cast<double>(d_);
      return;
    }
    s.eps_q = variance_bound_eps(family_, d_);
    s.n_q = code_length_bound(hist_, family_, d_, cfg_.protocol);
  }

  CompressionConfig cfg_;
  std::size_t d_;
  LevelFamily family_;
  LevelHistogram hist_;
  Codebook books_;
  std::vector<std::size_t> budgets_;
  std::vector<Rng> rngs_;
  std::vector<std::deque<Sample>> buffers_;
  std::vector<Segment> segments_;
  std::vector<TypeCdf> last_estimation_;
  std::uint64_t bits_ = 0;
};

/// Iteration state. `t` is the index of the next iteration to run.
class Solver {
 public:
  Solver(const Solver&) = delete;
  Solver& operator=(const Solver&) = delete;

  explicit Solver(const SolverConfig& cfg)
      : cfg_(cfg),
        op_(cfg_.problem.op),
        K_(op_.num_nodes()),
        channel_(cfg_.compression, op_.dim(), K_, cfg_.seed) {
    cfg_.schedule.validate();
    cfg_.noise.validate();
    const auto d = static_cast<Eigen::Index>(op_.dim());
    x1_ = cfg_.x1.value_or(Vec::Zero(d));
    if (x1_.size() != d) fail(ErrorCode::kDimensionMismatch, "X_1 dimension mismatch");
    x_ = x1_;
    x_prev_ = x1_;
    x_half_ = x1_;
    y_ = Vec::Zero(d);
    sum_half_ = Vec::Zero(d);
    prev_.assign(K_, Vec::Zero(d));
    for (std::size_t k = 0; k < K_; ++k) {
      noise_rngs_.push_back(detail::derive_stream(cfg_.seed, k, detail::kNoiseStream));
    }
  }

  void step() {
    const std::size_t t = t_;
    channel_.maybe_update(t);
    const double gamma = current_gamma();
    if (eta_ > gamma) max_eta_excess_ = std::max(max_eta_excess_, eta_ - gamma);
    last_gamma_ = gamma;
    last_eta_ = eta_;

    std::vector<Vec> cur(K_);
    const double K2 = static_cast<double>(K_) * static_cast<double>(K_);
    if (cfg_.method == Method::kQoda) {
      x_half_ = x_ - gamma * mean(prev_);
      for (std::size_t k = 0; k < K_; ++k) cur[k] = call_and_send(k, x_half_);
      oracle_calls_ += 1;
      for (std::size_t k = 0; k < K_; ++k) acc_.s_diff += (cur[k] - prev_[k]).squaredNorm() / K2;
    } else {
      std::vector<Vec> base(K_);
      for (std::size_t k = 0; k < K_; ++k) base[k] = call_and_send(k, x_);
      x_half_ = x_ - gamma * mean(base);
      for (std::size_t k = 0; k < K_; ++k) cur[k] = call_and_send(k, x_half_);
      oracle_calls_ += 2;
      for (std::size_t k = 0; k < K_; ++k) acc_.s_diff += (cur[k] - base[k]).squaredNorm() / K2;
    }
    if (t >= 2) {
      for (std::size_t k = 0; k < K_; ++k) acc_.s_norm += prev_[k].squaredNorm() / K2;
      acc_.s_move += (x_prev_ - x_).squaredNorm();
    }

    y_ -= mean(cur);
    eta_ = next_eta();
    x_prev_ = x_;
    x_ = x1_ + eta_ * y_;
    prev_ = std::move(cur);
    sum_half_ += x_half_;
    ++t_;
  }

  std::size_t t() const { return t_; }
  std::size_t completed() const { return t_ - 1; }
  const Vec& x() const { return x_; }
  const Vec& x1() const { return x1_; }
  const Vec& y() const { return y_; }
  const Vec& x_half() const { return x_half_; }
  const std::vector<Vec>& stored_messages() const { return prev_; }
  const RateAccumulators& accumulators() const { return acc_; }
  double gamma() const { return last_gamma_; }   // gamma of the last step
  double eta() const { return last_eta_; }       // eta that formed the last step's X_t
  double next_eta() const {
    switch (cfg_.schedule.kind) {
      case ScheduleKind::kGeneral: return rates_general(acc_).eta;
      case ScheduleKind::kAlt: return rates_alt(acc_, cfg_.schedule.q_hat).eta;
      case ScheduleKind::kConstant: return cfg_.schedule.constant;
    }
    return 1.0;
  }
  double eta_current() const { return eta_; }  // eta_t of the current X_t
  double max_eta_excess() const { return max_eta_excess_; }
  std::uint64_t oracle_calls_per_node() const { return oracle_calls_; }
  std::uint64_t bits() const { return channel_.bits(); }
  Channel& channel() { return channel_; }
  const Channel& channel() const { return channel_; }
  const OperatorSpec& op() const { return op_; }

  std::optional<Vec> averaged() const {
    if (completed() == 0) return std::nullopt;
    return sum_half_ / static_cast<double>(completed());
  }

 private:
  double current_gamma() const {
    switch (cfg_.schedule.kind) {
      case ScheduleKind::kGeneral: return rates_general(acc_).gamma;
      case ScheduleKind::kAlt: return rates_alt(acc_, cfg_.schedule.q_hat).gamma;
      case ScheduleKind::kConstant: return cfg_.schedule.constant;
    }
    return 1.0;
  }

  Vec mean(const std::vector<Vec>& msgs) const {
    Vec s = Vec::Zero(x_.size());
    for (const auto& m : msgs) s += m;
    return s / static_cast<double>(K_);
  }

  Vec call_and_send(std::size_t k, const Vec& point) {
    Vec v = sample_oracle(op_, k, cfg_.noise, point, noise_rngs_[k]);
    channel_.record(k, v);
    return channel_.transmit(k, v);
  }

  SolverConfig cfg_;
  const OperatorSpec& op_;
  std::size_t K_;
  Channel channel_;
  std::vector<Rng> noise_rngs_;
  Vec x1_, x_, x_prev_, x_half_, y_, sum_half_;
  std::vector<Vec> prev_;
  RateAccumulators acc_;
  double eta_ = 1.0;
  double last_gamma_ = 1.0;
  double last_eta_ = 1.0;
  double max_eta_excess_ = 0.0;
  std::uint64_t oracle_calls_ = 0;
  std::size_t t_ = 1;
};

struct MetricRow {
  std::size_t t = 0;
  double gap = 0.0;
  double gamma = 0.0;
  double eta = 0.0;
  std::uint64_t bits = 0;
  std::uint64_t oracle_calls = 0;
  double eps_q = 0.0;
};

struct RunSummary {
  double final_gap = std::numeric_limits<double>::quiet_NaN();
  double slope = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t total_bits = 0;
  double eps_bar = 0.0;
  double eps_hat = 0.0;
  double n_bar = 0.0;
  std::uint64_t oracle_calls_per_node = 0;
  double max_eta_excess = 0.0;  // max over steps of eta_t - gamma_t, clipped at 0
  bool gap_converged = true;
};

struct RunMetrics {
  std::vector<MetricRow> rows;
  RunSummary summary;
  std::vector<Segment> segments;
  std::optional<Vec> averaged;  // unset when T = 0
  std::vector<Sample> final_samples;  // recent dual vectors (adaptive runs only)
  std::optional<LevelFamily> final_family;
};

inline std::vector<std::size_t> default_checkpoints(std::size_t T) {
  std::vector<std::size_t> out;
  for (std::size_t p = 1; p <= T; p *= 2) out.push_back(p);
  if (T > 0 && (out.empty() || out.back() != T)) out.push_back(T);
  return out;
}

/// Least-squares slope of log(gap) against log(t) over rows with
/// t in [t_lo, t_hi] and positive gap. NaN with fewer than two points.
inline double fit_loglog_slope(std::span<const MetricRow> rows, double t_lo, double t_hi) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : rows) {
    const auto t = static_cast<double>(r.t);
    if (t >= t_lo && t <= t_hi && r.gap > 0.0 && std::isfinite(r.gap)) {
      pts.emplace_back(std::log(t), std::log(r.gap));
    }
  }
  if (pts.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxy = 0.0, sxx = 0.0;
  for (const auto& [x, y] : pts) {
    sxy += (x - mx) * (y - my);
    sxx += (x - mx) * (x - mx);
  }
  return sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

inline RunMetrics run(const SolverConfig& cfg) {
  Solver solver(cfg);
  RunMetrics out;
  const auto x1 = cfg.x1.value_or(Vec::Zero(static_cast<Eigen::Index>(cfg.problem.op.dim())));
  const TestDomain dom = default_domain(cfg.problem.x_star, x1);
  auto checkpoints = cfg.checkpoints.empty() ? default_checkpoints(cfg.T) : cfg.checkpoints;
  std::sort(checkpoints.begin(), checkpoints.end());
  auto next = checkpoints.begin();
  while (next != checkpoints.end() && *next == 0) ++next;
  for (std::size_t t = 1; t <= cfg.T; ++t) {
    solver.step();
    if (next != checkpoints.end() && *next == t) {
      while (next != checkpoints.end() && *next == t) ++next;
      const auto gap = restricted_gap(*solver.averaged(), solver.op(), dom);
      out.summary.gap_converged = out.summary.gap_converged && gap.converged;
      out.rows.push_back({t, gap.value, solver.gamma(), solver.eta(), solver.bits(),
                          solver.oracle_calls_per_node(), solver.channel().current_eps()});
    }
  }
  solver.channel().finish(cfg.T);
  out.segments = solver.channel().segments();
  out.averaged = solver.averaged();
  out.final_samples = solver.channel().recent_samples();
  if (solver.channel().enabled()) out.final_family = solver.channel().family();

  auto& s = out.summary;
  s.total_bits = solver.bits();
  s.oracle_calls_per_node = solver.oracle_calls_per_node();
  s.max_eta_excess = solver.max_eta_excess();
  if (cfg.T > 0) {
    s.final_gap = out.rows.empty() || out.rows.back().t != cfg.T
                      ? restricted_gap(*out.averaged, solver.op(), dom).value
                      : out.rows.back().gap;
    const double T = static_cast<double>(cfg.T);
    for (const auto& seg : out.segments) {
      const auto len = static_cast<double>(seg.length);
      s.eps_bar += len * seg.eps_q / T;
      s.eps_hat += len * std::sqrt(seg.eps_q) / T;
      s.n_bar += len * seg.n_q / T;
    }
    const double lo = cfg.slope_from > 0.0 ? cfg.slope_from : std::max(1.0, T / 100.0);
    s.slope = fit_loglog_slope(out.rows, lo, T);
  }
  return out;
}

inline RunMetrics run_qoda(SolverConfig cfg) {
  cfg.method = Method::kQoda;
  return run(cfg);
}

inline RunMetrics run_extragradient_baseline(SolverConfig cfg) {
  cfg.method = Method::kExtragradient;
  return run(cfg);
}

}  // namespace qoda
