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

// Experiment execution and reporting, including run comparison and the
// named suites.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "qoda/adapt.hpp"
#include "qoda/config.hpp"
#include "qoda/error.hpp"
#include "qoda/solver.hpp"

namespace qoda {

using Json = nlohmann::ordered_json;

inline constexpr const char* kCsvHeader = "t,gap,gamma,eta,bits,oracle_calls,eps_q";

inline std::string metrics_csv(const RunMetrics& m) {
  std::string out = std::string(kCsvHeader) + "\n";
  char buf[256];
  for (const auto& r : m.rows) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%llu,%llu,%.17g\n", r.t, r.gap,
                  r.gamma, r.eta, static_cast<unsigned long long>(r.bits),
                  static_cast<unsigned long long>(r.oracle_calls), r.eps_q);
    out += buf;
  }
  return out;
}

/// NaN and infinities become null.
inline Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

inline Json summary_json(const RunMetrics& m) {
  const auto& s = m.summary;
  Json j;
  j["final_gap"] = number(s.final_gap);
  j["slope"] = number(s.slope);
  j["total_bits"] = s.total_bits;
  j["eps_bar"] = number(s.eps_bar);
  j["eps_hat"] = number(s.eps_hat);
  j["n_bar"] = number(s.n_bar);
  j["oracle_calls_per_node"] = s.oracle_calls_per_node;
  j["level_segments"] = m.segments.size();
  j["max_eta_minus_gamma"] = s.max_eta_excess;
  j["gap_converged"] = s.gap_converged;
  return j;
}

struct ExperimentResult {
  ExperimentConfig config;
  RunMetrics metrics;
};

inline ExperimentResult execute(const ExperimentConfig& cfg) {
  return {cfg, run(build_solver_config(cfg))};
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::kParseError, "cannot write " + path.string());
  f << text;
}

/// Runs one experiment and writes its output files into `out_dir`.
inline Json run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const SolverConfig sc = build_solver_config(cfg);
  const RunMetrics m = run(sc);
  write_text(out_dir / "metrics.csv", metrics_csv(m));
  write_text(out_dir / "config.ini", echo_config(cfg));
  Json j = summary_json(m);
  write_text(out_dir / "summary.json", j.dump(2) + "\n");
  return j;
}

/// Sum over types of mu^m times the best per-type objective (layer-wise),
/// and the best single sequence for the pooled distribution (global), both
/// with `alpha` interior levels per sequence.
struct MqvComparison {
  double layerwise = 0.0;
  double global = 0.0;
};

inline MqvComparison compare_mqv(std::span<const Sample> samples, const LevelFamily& family,
                                 std::size_t alpha, std::size_t grid = kDefaultGrid) {
  const auto cdf = weighted_cdf(samples, family);
  const auto models = cdf.models();
  MqvComparison out;
  std::vector<std::size_t> budgets(family.num_types(), alpha);
  const auto layer = optimize_family(family, models, budgets, grid);
  out.layerwise = mqv_objective(layer, models);
  const TypeCdf pooled = pooled_cdf(cdf, family);
  const auto global_seq = optimize_levels(pooled, alpha, grid).levels;
  const auto global =
      family.with_sequences(std::vector<LevelSequence>(family.num_types(), global_seq));
  out.global = mqv_objective(global, models);
  return out;
}

inline std::string method_name(Method m) {
  return m == Method::kQoda ? "qoda" : "extragradient";
}

/// Runs every config and reports aligned deltas against the first one.
inline Json compare(const std::vector<ExperimentConfig>& configs) {
  if (configs.size() < 2) fail(ErrorCode::kIncomparableConfigs, "need at least two configs");
  const auto& base = configs.front();
  for (const auto& c : configs) {
    if (c.problem != base.problem || c.dim != base.dim || c.T != base.T) {
      fail(ErrorCode::kIncomparableConfigs,
           "configs must share problem preset, dimension and T; got " + c.problem + "/" +
               std::to_string(c.dim) + "/" + std::to_string(c.T) + " vs " + base.problem + "/" +
               std::to_string(base.dim) + "/" + std::to_string(base.T));
    }
  }
  std::vector<ExperimentResult> results;
  for (const auto& c : configs) results.push_back(execute(c));

  double threshold = 0.0;
  for (const auto& r : results) {
    if (std::isfinite(r.metrics.summary.final_gap)) {
      threshold = std::max(threshold, r.metrics.summary.final_gap);
    }
  }
  Json runs = Json::array();
  const auto& b = results.front().metrics.summary;
  for (const auto& r : results) {
    const auto& s = r.metrics.summary;
    Json j = summary_json(r.metrics);
    j["method"] = method_name(r.config.method);
    j["nodes"] = r.config.nodes;
    j["types"] = r.config.types;
    j["quantized"] = r.config.quantize;
    j["gap_delta"] = number(s.final_gap - b.final_gap);
    j["bits_ratio"] = number(static_cast<double>(s.total_bits) / static_cast<double>(b.total_bits));
    j["oracle_call_ratio"] =
        number(static_cast<double>(s.oracle_calls_per_node) /
               static_cast<double>(b.oracle_calls_per_node));
    Json bits_to = nullptr;
    for (const auto& row : r.metrics.rows) {
      if (row.gap <= threshold) {
        bits_to = row.bits;
        break;
      }
    }
    j["bits_to_threshold"] = bits_to;
    runs.push_back(j);
  }
  Json out;
  out["gap_threshold"] = number(threshold);
  out["runs"] = runs;

  // Layer-wise vs global level optimization on common samples: the samples
  // of the run with the most types, at that run's first budget.
  const ExperimentResult* ref = nullptr;
  for (const auto& r : results) {
    if (!r.metrics.final_samples.empty() && (!ref || r.config.types > ref->config.types)) {
      ref = &r;
    }
  }
  if (ref) {
    const auto& family = *ref->metrics.final_family;
    const std::size_t alpha = family.sequence(0).alpha();
    try {
      const auto mqv =
          compare_mqv(ref->metrics.final_samples, family, alpha, ref->config.adapt.grid);
      out["mqv"] = {{"types", ref->config.types}, {"alpha", alpha},
                    {"layerwise", mqv.layerwise}, {"global", mqv.global},
                    {"layerwise_le_global", mqv.layerwise <= mqv.global}};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kAllZeroSamples) throw;
    }
  }
  return out;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"rate-suite", "k-scaling", "communication",
                                                 "layerwise"};
  return names;
}

namespace detail {

inline ExperimentConfig preset_config(const std::string& preset,
                                      std::vector<std::pair<std::string, std::string>> kv,
                                      const RawConfig& overrides) {
  RawConfig file;
  file["experiment"] = {preset, "suite"};
  for (auto& [k, v] : kv) file[k] = {v, "suite"};
  return resolve_config(layer_config(file, overrides));
}

}  // namespace detail

/// Named multi-run experiments. `seeds` runs per cell starting at `seed`.
inline Json run_suite(const std::string& name, std::uint64_t seed, std::size_t seeds,
                      const RawConfig& overrides = {}) {
  using detail::preset_config;
  auto seed_kv = [](std::uint64_t s) {
    return std::pair<std::string, std::string>{"run.seed", std::to_string(s)};
  };
  Json out;
  out["suite"] = name;
  if (name == "rate-suite") {
    const std::pair<const char*, const char*> cells[] = {
        {"abs", "bilinear-abs"}, {"rel", "cocoercive-rel"}, {"alt", "bilinear-rel-alt"}};
    for (const auto& [label, preset] : cells) {
      std::vector<double> slopes;
      Json per_seed = Json::array();
      for (std::size_t i = 0; i < seeds; ++i) {
        const auto cfg = preset_config(preset, {seed_kv(seed + i)}, overrides);
        const auto m = run(build_solver_config(cfg));
        slopes.push_back(m.summary.slope);
        per_seed.push_back(number(m.summary.slope));
      }
      out[label] = {{"preset", preset}, {"slopes", per_seed}, {"median_slope", number(median(slopes))}};
    }
  } else if (name == "k-scaling") {
    Json table = Json::array();
    for (std::size_t K : {1, 4, 16}) {
      std::vector<double> gaps;
      for (std::size_t i = 0; i < seeds; ++i) {
        const auto cfg = preset_config("bilinear-abs-short",
                                       {seed_kv(seed + i), {"noise.sigma", "0.5"},
                                        {"problem.nodes", std::to_string(K)}},
                                       overrides);
        gaps.push_back(run(build_solver_config(cfg)).summary.final_gap);
      }
      table.push_back({{"nodes", K}, {"median_final_gap", number(median(gaps))}});
    }
    out["table"] = table;
  } else if (name == "communication") {
    std::vector<ExperimentConfig> cfgs = {
        preset_config("bilinear-abs-short", {seed_kv(seed)}, overrides),
        preset_config("bilinear-abs-short",
                      {seed_kv(seed), {"schedule.method", "extragradient"}}, overrides)};
    out["comparison"] = compare(cfgs);
  } else if (name == "layerwise") {
    std::vector<ExperimentConfig> cfgs = {
        preset_config("bilinear-layerwise", {seed_kv(seed)}, overrides),
        preset_config("bilinear-global", {seed_kv(seed)}, overrides)};
    out["comparison"] = compare(cfgs);
  } else {
    std::string known;
    for (const auto& s : suite_names()) known += (known.empty() ? "" : ", ") + s;
    fail(ErrorCode::kUnknownPreset, "unknown suite '" + name + "' (known: " + known + ")");
  }
  return out;
}

}  // namespace qoda
