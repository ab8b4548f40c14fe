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

// Experiment configuration: an INI-style format layered over named presets,
// with an echo that parses back to the same run.
//
//   experiment = bilinear-abs     # optional; loads a named preset first
//   [problem]
//   preset = cocoercive:0.1:1
//   [quantization]
//   types = 2
//   levels.0 = exponential:4
//   budget.1 = 6

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qoda/error.hpp"
#include "qoda/levels.hpp"
#include "qoda/solver.hpp"
#include "qoda/vi.hpp"

namespace qoda {

struct ConfigValue {
  std::string value;
  std::string origin;  // "file:line", "preset <name>", "--set", "default"
};

using RawConfig = std::map<std::string, ConfigValue>;

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] inline void parse_fail(const ConfigValue& v, const std::string& key,
                                    const std::string& what) {
  fail(ErrorCode::kParseError, v.origin + ": " + key + " = '" + v.value + "': " + what);
}

inline double to_double(const std::string& s, const ConfigValue& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(x)) parse_fail(v, key, "expected a finite number");
    return x;
  } catch (const std::logic_error&) {
    parse_fail(v, key, "expected a number");
  }
}

inline std::uint64_t to_uint(const std::string& s, const ConfigValue& v, const std::string& key) {
  std::uint64_t x = 0;
  // Accept 1e5 style for iteration counts.
  if (s.find_first_of("eE.") != std::string::npos) {
    const double d = to_double(s, v, key);
    if (d < 0 || d != std::floor(d) || d > 1.8e19) parse_fail(v, key, "expected a whole number");
    return static_cast<std::uint64_t>(d);
  }
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    parse_fail(v, key, "expected a non-negative integer");
  }
  return x;
}

inline bool to_bool(const std::string& s, const ConfigValue& v, const std::string& key) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  parse_fail(v, key, "expected true or false");
}

inline std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

}  // namespace detail

/// Parses config text. Keys inside a section are stored as "section.key".
inline RawConfig parse_config_text(std::string_view text, const std::string& source) {
  RawConfig out;
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string s = detail::trim(line);
    if (s.empty() || s[0] == ';') continue;
    const std::string where = source + ":" + std::to_string(line_no);
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) {
        fail(ErrorCode::kParseError, where + ": malformed section header '" + s + "'");
      }
      section = detail::trim(std::string_view(s).substr(1, s.size() - 2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::kParseError, where + ": expected 'key = value', got '" + s + "'");
    }
    const std::string key = detail::trim(std::string_view(s).substr(0, eq));
    if (key.empty()) fail(ErrorCode::kParseError, where + ": empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (out.count(full)) {
      fail(ErrorCode::kParseError, where + ": duplicate key '" + full + "' (first at " +
                                       out[full].origin + ")");
    }
    out[full] = {detail::trim(std::string_view(s).substr(eq + 1)), where};
  }
  return out;
}

inline RawConfig read_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::kParseError, path + ": cannot open config file");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str(), path);
}

inline RawConfig default_raw_config() {
  const std::pair<const char*, const char*> kv[] = {
      {"problem.preset", "bilinear"},
      {"problem.dim", "20"},
      {"problem.nodes", "4"},
      {"problem.heterogeneity", "auto"},
      {"problem.zero_solution", "false"},
      {"noise.kind", "absolute"},
      {"noise.sigma", "0.1"},
      {"noise.sigma_r", "0.5"},
      {"noise.clip", "0"},
      {"quantization.mode", "layerwise"},
      {"quantization.norm", "2"},
      {"quantization.protocol", "main"},
      {"quantization.coding", "huffman"},
      {"quantization.types", "1"},
      {"quantization.budget", "6"},
      {"quantization.layers", "auto"},
      {"quantization.adaptive", "true"},
      {"quantization.update_period", "1000"},
      {"quantization.estimator", "empirical"},
      {"quantization.grid", "512"},
      {"quantization.samples", "16"},
      {"schedule.rule", "general"},
      {"schedule.method", "qoda"},
      {"run.T", "10000"},
      {"run.seed", "1"},
      {"run.checkpoints", "pow2"},
      {"run.slope_from", "auto"},
      {"run.out", "out"},
  };
  RawConfig out;
  for (const auto& [k, v] : kv) out[k] = {v, "default"};
  return out;
}

/// Named experiment presets layered over the defaults.
inline const std::map<std::string, std::vector<std::pair<std::string, std::string>>>&
experiment_presets() {
  static const std::map<std::string, std::vector<std::pair<std::string, std::string>>> p = {
      {"bilinear-abs",
       {{"problem.preset", "bilinear"}, {"noise.kind", "absolute"}, {"noise.sigma", "0.1"},
        {"schedule.rule", "general"}, {"run.T", "100000"}}},
      {"bilinear-abs-short",
       {{"problem.preset", "bilinear"}, {"noise.kind", "absolute"}, {"noise.sigma", "0.1"},
        {"run.T", "10000"}}},
      {"cocoercive-rel",
       {{"problem.preset", "cocoercive:0.1:1"}, {"noise.kind", "relative"},
        {"noise.sigma_r", "0.5"}, {"schedule.rule", "general"}, {"run.T", "10000"}}},
      {"bilinear-rel-alt",
       {{"problem.preset", "bilinear"}, {"noise.kind", "relative"}, {"noise.sigma_r", "0.5"},
        {"noise.clip", "2"}, {"schedule.rule", "alt:0.25"}, {"run.T", "10000"}}},
      {"strongly-monotone-abs",
       {{"problem.preset", "strongly_monotone:0.1"}, {"noise.kind", "absolute"},
        {"noise.sigma", "0.1"}, {"run.T", "10000"}}},
      {"bilinear-extragradient",
       {{"problem.preset", "bilinear"}, {"noise.kind", "absolute"}, {"noise.sigma", "0.1"},
        {"schedule.method", "extragradient"}, {"run.T", "10000"}}},
      {"bilinear-layerwise",
       {{"problem.preset", "bilinear"}, {"noise.kind", "absolute"}, {"noise.sigma", "0.1"},
        {"quantization.types", "2"}, {"run.T", "10000"}}},
      {"bilinear-global",
       {{"problem.preset", "bilinear"}, {"noise.kind", "absolute"}, {"noise.sigma", "0.1"},
        {"quantization.types", "1"}, {"run.T", "10000"}}},
      {"bilinear-unquantized",
       {{"problem.preset", "bilinear"}, {"noise.kind", "absolute"}, {"noise.sigma", "0.1"},
        {"quantization.mode", "none"}, {"run.T", "10000"}}},
  };
  return p;
}

inline bool is_experiment_preset(const std::string& name) {
  return experiment_presets().count(name) > 0;
}

struct ExperimentConfig {
  std::string experiment;  // preset this config started from; may be empty

  std::string problem = "bilinear";
  ProblemKind kind = ProblemKind::kBilinear;
  ProblemOptions problem_options;
  std::string heterogeneity = "auto";
  std::size_t dim = 20;
  std::size_t nodes = 4;

  NoiseModel noise;
  double sigma = 0.1;
  double sigma_r = 0.5;

  bool quantize = true;
  int norm = 2;
  Protocol protocol = Protocol::kMain;
  Scheme scheme = Scheme::kHuffman;
  std::size_t types = 1;
  std::vector<std::string> levels;  // one spec per type
  std::vector<std::pair<std::size_t, std::size_t>> layers;  // (size, type)
  AdaptiveLevels adapt;

  std::string rule = "general";
  Schedule schedule;
  Method method = Method::kQoda;

  std::size_t T = 10000;
  std::uint64_t seed = 1;
  std::string checkpoints = "pow2";
  std::string slope_from = "auto";
  std::string out = "out";
};

namespace detail {

inline LevelSequence parse_levels(const std::string& spec, const ConfigValue& v,
                                  const std::string& key) {
  const auto colon = spec.find(':');
  if (colon != std::string::npos) {
    const std::string kind = spec.substr(0, colon);
    const auto s = to_uint(spec.substr(colon + 1), v, key);
    if (kind == "uniform") return LevelSequence::uniform(s);
    if (kind == "exponential") return LevelSequence::exponential(s);
    parse_fail(v, key, "level generator must be uniform:s or exponential:s");
  }
  std::vector<double> pts;
  for (const auto& part : split(spec, ',')) pts.push_back(to_double(part, v, key));
  try {
    return LevelSequence(std::move(pts));
  } catch (const Error& e) {
    parse_fail(v, key, e.what());
  }
}

inline void parse_problem(ExperimentConfig& c, const ConfigValue& v) {
  const auto parts = split(v.value, ':');
  const std::string& name = parts[0];
  auto num = [&](std::size_t i) { return to_double(parts[i], v, "problem.preset"); };
  if (name == "bilinear" && parts.size() == 1) {
    c.kind = ProblemKind::kBilinear;
  } else if (name == "strongly_monotone" && parts.size() <= 2) {
    c.kind = ProblemKind::kStronglyMonotone;
    if (parts.size() == 2) c.problem_options.mu = num(1);
  } else if (name == "cocoercive" && parts.size() <= 3) {
    c.kind = ProblemKind::kCocoercive;
    if (parts.size() == 2) {
      c.problem_options.spectrum_lo = c.problem_options.spectrum_hi = num(1);
    } else if (parts.size() == 3) {
      c.problem_options.spectrum_lo = num(1);
      c.problem_options.spectrum_hi = num(2);
    }
  } else {
    fail(ErrorCode::kUnknownPreset,
         v.origin + ": unknown problem preset '" + v.value +
             "' (expected bilinear, strongly_monotone:mu or cocoercive:spectrum)");
  }
  c.problem = v.value;
}

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = [] {
    std::set<std::string> s{"experiment"};
    for (const auto& [k, v] : default_raw_config()) s.insert(k);
    return s;
  }();
  return keys;
}

}  // namespace detail

/// Layers defaults, the named experiment preset (from the `experiment` key of
/// `file` or of `overrides`), the file and then the overrides.
inline RawConfig layer_config(const RawConfig& file, const RawConfig& overrides = {}) {
  RawConfig merged = default_raw_config();
  std::optional<ConfigValue> experiment;
  if (auto it = file.find("experiment"); it != file.end()) experiment = it->second;
  if (auto it = overrides.find("experiment"); it != overrides.end()) experiment = it->second;
  if (experiment && !experiment->value.empty()) {
    const auto& presets = experiment_presets();
    const auto it = presets.find(experiment->value);
    if (it == presets.end()) {
      fail(ErrorCode::kUnknownPreset,
           experiment->origin + ": unknown experiment preset '" + experiment->value + "'");
    }
    for (const auto& [k, v] : it->second) merged[k] = {v, "preset " + experiment->value};
    merged["experiment"] = *experiment;
  }
  for (const auto& [k, v] : file) merged[k] = v;
  for (const auto& [k, v] : overrides) merged[k] = v;
  return merged;
}

inline ExperimentConfig resolve_config(const RawConfig& raw) {
  using namespace detail;
  for (const auto& [k, v] : raw) {
    const bool per_type = k.rfind("quantization.levels.", 0) == 0 ||
                          k.rfind("quantization.budget.", 0) == 0;
    if (!per_type && !known_keys().count(k)) parse_fail(v, k, "unknown key");
  }
  auto get = [&](const std::string& k) -> const ConfigValue& { return raw.at(k); };
  auto str = [&](const std::string& k) { return get(k).value; };
  auto uint = [&](const std::string& k) { return to_uint(str(k), get(k), k); };
  auto dbl = [&](const std::string& k) { return to_double(str(k), get(k), k); };
  auto boolean = [&](const std::string& k) { return to_bool(str(k), get(k), k); };
  auto choose = [&](const std::string& k, std::initializer_list<std::string> allowed) {
    const auto& v = get(k);
    if (std::find(allowed.begin(), allowed.end(), v.value) == allowed.end()) {
      std::string opts;
      for (const auto& a : allowed) opts += (opts.empty() ? "" : " | ") + a;
      parse_fail(v, k, "expected one of " + opts);
    }
    return v.value;
  };

  ExperimentConfig c;
  if (auto it = raw.find("experiment"); it != raw.end()) c.experiment = it->second.value;
  parse_problem(c, get("problem.preset"));
  c.dim = uint("problem.dim");
  c.nodes = uint("problem.nodes");
  if (c.dim == 0) parse_fail(get("problem.dim"), "problem.dim", "must be positive");
  if (c.nodes == 0) parse_fail(get("problem.nodes"), "problem.nodes", "must be positive");
  if (c.kind == ProblemKind::kBilinear && c.dim % 2 != 0) {
    parse_fail(get("problem.dim"), "problem.dim", "bilinear problems need an even dimension");
  }
  c.problem_options.zero_solution = boolean("problem.zero_solution");

  const auto kind = choose("noise.kind", {"none", "absolute", "relative"});
  c.sigma = dbl("noise.sigma");
  c.sigma_r = dbl("noise.sigma_r");
  c.noise.kind = kind == "none" ? NoiseKind::kNone
                 : kind == "absolute" ? NoiseKind::kAbsolute
                                      : NoiseKind::kRelative;
  c.noise.level = c.noise.kind == NoiseKind::kAbsolute   ? c.sigma
                  : c.noise.kind == NoiseKind::kRelative ? c.sigma_r
                                                         : 0.0;
  c.noise.clip = dbl("noise.clip");
  if (c.sigma < 0) parse_fail(get("noise.sigma"), "noise.sigma", "must be >= 0");
  if (c.sigma_r < 0) parse_fail(get("noise.sigma_r"), "noise.sigma_r", "must be >= 0");
  if (c.noise.clip < 0) parse_fail(get("noise.clip"), "noise.clip", "must be >= 0 (0 = off)");

  c.heterogeneity = str("problem.heterogeneity");
  if (c.heterogeneity == "auto") {
    c.problem_options.heterogeneity = c.noise.kind == NoiseKind::kAbsolute ? 0.1 : 0.0;
  } else {
    c.problem_options.heterogeneity = dbl("problem.heterogeneity");
    if (c.problem_options.heterogeneity < 0) {
      parse_fail(get("problem.heterogeneity"), "problem.heterogeneity", "must be >= 0");
    }
    if (c.noise.kind == NoiseKind::kRelative && c.problem_options.heterogeneity > 0) {
      parse_fail(get("problem.heterogeneity"), "problem.heterogeneity",
                 "relative noise requires identical node operators");
    }
  }

  c.quantize = choose("quantization.mode", {"layerwise", "none"}) == "layerwise";
  c.norm = static_cast<int>(uint("quantization.norm"));
  if (c.norm < 1) parse_fail(get("quantization.norm"), "quantization.norm", "must be >= 1");
  c.protocol = choose("quantization.protocol", {"main", "alternating"}) == "main"
                   ? Protocol::kMain
                   : Protocol::kAlternating;
  c.scheme = choose("quantization.coding", {"huffman", "elias"}) == "huffman" ? Scheme::kHuffman
                                                                             : Scheme::kElias;
  c.types = uint("quantization.types");
  if (c.types == 0) parse_fail(get("quantization.types"), "quantization.types", "must be >= 1");
  const auto default_budget = uint("quantization.budget");
  for (const auto& [k, v] : raw) {
    for (const std::string prefix : {"quantization.levels.", "quantization.budget."}) {
      if (k.rfind(prefix, 0) != 0) continue;
      const auto m = to_uint(k.substr(prefix.size()), v, k);
      if (m >= c.types) parse_fail(v, k, "type index exceeds quantization.types");
    }
  }
  for (std::size_t m = 0; m < c.types; ++m) {
    const std::string lk = "quantization.levels." + std::to_string(m);
    const std::string bk = "quantization.budget." + std::to_string(m);
    const bool has_l = raw.count(lk) > 0;
    const bool has_b = raw.count(bk) > 0;
    if (has_l && has_b) {
      parse_fail(get(lk), lk, "conflicts with " + bk + " (" + get(bk).origin +
                                  "); give explicit levels or a budget, not both");
    }
    if (has_l) {
      parse_levels(str(lk), get(lk), lk);
      c.levels.push_back(str(lk));
    } else {
      c.levels.push_back("uniform:" + std::to_string(has_b ? uint(bk) : default_budget));
    }
  }
  const std::string layers = str("quantization.layers");
  if (layers == "auto") {
    for (std::size_t m = 0; m < c.types; ++m) {
      const std::size_t lo = c.dim * m / c.types;
      const std::size_t hi = c.dim * (m + 1) / c.types;
      c.layers.emplace_back(hi - lo, m);
    }
  } else {
    std::size_t total = 0;
    for (const auto& part : split(layers, ',')) {
      const auto pair = split(part, ':');
      if (pair.size() != 2) {
        parse_fail(get("quantization.layers"), "quantization.layers", "expected size:type list");
      }
      const auto size = to_uint(pair[0], get("quantization.layers"), "quantization.layers");
      const auto type = to_uint(pair[1], get("quantization.layers"), "quantization.layers");
      if (type >= c.types) {
        parse_fail(get("quantization.layers"), "quantization.layers", "type index out of range");
      }
      c.layers.emplace_back(size, type);
      total += size;
    }
    if (total != c.dim) {
      parse_fail(get("quantization.layers"), "quantization.layers",
                 "layer sizes sum to " + std::to_string(total) + ", dimension is " +
                     std::to_string(c.dim));
    }
  }
  c.adapt.enabled = boolean("quantization.adaptive");
  c.adapt.period = uint("quantization.update_period");
  c.adapt.samples = uint("quantization.samples");
  c.adapt.grid = uint("quantization.grid");
  c.adapt.estimator =
      choose("quantization.estimator", {"empirical", "truncnormal"}) == "empirical"
          ? LevelEstimator::kEmpirical
          : LevelEstimator::kTruncatedNormal;
  if (c.adapt.period == 0) {
    parse_fail(get("quantization.update_period"), "quantization.update_period", "must be >= 1");
  }
  if (c.adapt.samples == 0) {
    parse_fail(get("quantization.samples"), "quantization.samples", "must be >= 1");
  }

  c.rule = str("schedule.rule");
  {
    const auto& v = get("schedule.rule");
    const auto parts = split(c.rule, ':');
    if (parts[0] == "general" && parts.size() == 1) {
      c.schedule.kind = ScheduleKind::kGeneral;
    } else if (parts[0] == "alt" && parts.size() <= 2) {
      c.schedule.kind = ScheduleKind::kAlt;
      if (parts.size() == 2) c.schedule.q_hat = to_double(parts[1], v, "schedule.rule");
      if (!(c.schedule.q_hat > 0.0 && c.schedule.q_hat <= 0.25)) {
        parse_fail(v, "schedule.rule", "q_hat must lie in (0, 1/4]");
      }
    } else if (parts[0] == "constant" && parts.size() == 2) {
      c.schedule.kind = ScheduleKind::kConstant;
      c.schedule.constant = to_double(parts[1], v, "schedule.rule");
      if (!(c.schedule.constant > 0.0)) parse_fail(v, "schedule.rule", "rate must be positive");
    } else {
      parse_fail(v, "schedule.rule", "expected general, alt:q_hat or constant:c");
    }
  }
  c.method = choose("schedule.method", {"qoda", "extragradient"}) == "qoda"
                 ? Method::kQoda
                 : Method::kExtragradient;

  c.T = uint("run.T");
  if (c.T == 0) parse_fail(get("run.T"), "run.T", "must be >= 1");
  c.seed = uint("run.seed");
  c.checkpoints = str("run.checkpoints");
  {
    const auto& v = get("run.checkpoints");
    const auto parts = split(c.checkpoints, ':');
    if (parts[0] == "geometric" && parts.size() == 2) {
      if (to_uint(parts[1], v, "run.checkpoints") == 0) {
        parse_fail(v, "run.checkpoints", "need at least one point per decade");
      }
    } else if (c.checkpoints != "pow2") {
      for (const auto& p : split(c.checkpoints, ',')) to_uint(p, v, "run.checkpoints");
    }
  }
  c.slope_from = str("run.slope_from");
  if (c.slope_from != "auto") dbl("run.slope_from");
  c.out = str("run.out");
  return c;
}

inline std::vector<std::size_t> resolve_checkpoints(const ExperimentConfig& c) {
  const auto parts = detail::split(c.checkpoints, ':');
  std::vector<std::size_t> out;
  if (c.checkpoints == "pow2") return default_checkpoints(c.T);
  if (parts[0] == "geometric") {
    const double per_decade = std::stod(parts[1]);
    const double top = std::log10(static_cast<double>(c.T));
    for (double e = 0.0; e <= top + 1e-12; e += 1.0 / per_decade) {
      out.push_back(static_cast<std::size_t>(std::llround(std::pow(10.0, e))));
    }
    out.push_back(c.T);
  } else {
    for (const auto& p : detail::split(c.checkpoints, ',')) out.push_back(std::stoull(p));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  while (!out.empty() && out.back() > c.T) out.pop_back();
  return out;
}

/// Resolved config written back in the input format.
inline std::string echo_config(const ExperimentConfig& c) {
  using detail::format_double;
  std::ostringstream o;
  if (!c.experiment.empty()) o << "# started from experiment preset " << c.experiment << "\n";
  o << "[problem]\n"
    << "preset = " << c.problem << "\n"
    << "dim = " << c.dim << "\n"
    << "nodes = " << c.nodes << "\n"
    << "heterogeneity = " << format_double(c.problem_options.heterogeneity) << "\n"
    << "zero_solution = " << (c.problem_options.zero_solution ? "true" : "false") << "\n"
    << "\n[noise]\n"
    << "kind = "
    << (c.noise.kind == NoiseKind::kNone       ? "none"
        : c.noise.kind == NoiseKind::kAbsolute ? "absolute"
                                               : "relative")
    << "\n"
    << "sigma = " << format_double(c.sigma) << "\n"
    << "sigma_r = " << format_double(c.sigma_r) << "\n"
    << "clip = " << format_double(c.noise.clip) << "\n"
    << "\n[quantization]\n"
    << "mode = " << (c.quantize ? "layerwise" : "none") << "\n"
    << "norm = " << c.norm << "\n"
    << "protocol = " << (c.protocol == Protocol::kMain ? "main" : "alternating") << "\n"
    << "coding = " << (c.scheme == Scheme::kHuffman ? "huffman" : "elias") << "\n"
    << "types = " << c.types << "\n";
  for (std::size_t m = 0; m < c.levels.size(); ++m) {
    o << "levels." << m << " = " << c.levels[m] << "\n";
  }
  o << "layers = ";
  for (std::size_t k = 0; k < c.layers.size(); ++k) {
    o << (k ? "," : "") << c.layers[k].first << ":" << c.layers[k].second;
  }
  o << "\n"
    << "adaptive = " << (c.adapt.enabled ? "true" : "false") << "\n"
    << "update_period = " << c.adapt.period << "\n"
    << "estimator = "
    << (c.adapt.estimator == LevelEstimator::kEmpirical ? "empirical" : "truncnormal") << "\n"
    << "grid = " << c.adapt.grid << "\n"
    << "samples = " << c.adapt.samples << "\n"
    << "\n[schedule]\n"
    << "rule = " << c.rule << "\n"
    << "method = " << (c.method == Method::kQoda ? "qoda" : "extragradient") << "\n"
    << "\n[run]\n"
    << "T = " << c.T << "\n"
    << "seed = " << c.seed << "\n"
    << "checkpoints = " << c.checkpoints << "\n"
    << "slope_from = " << c.slope_from << "\n"
    << "out = " << c.out << "\n";
  return o.str();
}

inline LevelFamily build_family(const ExperimentConfig& c) {
  std::vector<LevelSequence> seqs;
  for (const auto& spec : c.levels) {
    seqs.push_back(detail::parse_levels(spec, {spec, "resolved"}, "levels"));
  }
  std::vector<std::size_t> sizes, types;
  for (const auto& [size, type] : c.layers) {
    sizes.push_back(size);
    types.push_back(type);
  }
  return LevelFamily(std::move(seqs), assignment_from_layers(sizes, types), c.norm);
}

inline SolverConfig build_solver_config(const ExperimentConfig& c) {
  SolverConfig s;
  s.problem = make_problem(c.kind, c.dim, c.nodes, c.seed, c.problem_options);
  s.noise = c.noise;
  s.compression.enabled = c.quantize;
  if (c.quantize) s.compression.family = build_family(c);
  s.compression.protocol = c.protocol;
  s.compression.scheme = c.scheme;
  s.compression.adapt = c.adapt;
  s.schedule = c.schedule;
  s.method = c.method;
  s.T = c.T;
  s.seed = c.seed;
  s.checkpoints = resolve_checkpoints(c);
  s.slope_from = c.slope_from == "auto" ? 0.0 : std::stod(c.slope_from);
  return s;
}

/// Config from a file path, or from a preset name when no such file exists.
inline ExperimentConfig load_config(const std::string& path_or_preset,
                                    const RawConfig& overrides = {}) {
  RawConfig file;
  if (std::ifstream(path_or_preset).good()) {
    file = read_config_file(path_or_preset);
  } else if (is_experiment_preset(path_or_preset)) {
    file["experiment"] = {path_or_preset, "command line"};
  } else {
    fail(ErrorCode::kUnknownPreset,
         "'" + path_or_preset + "' is neither a readable config file nor an experiment preset");
  }
  return resolve_config(layer_config(file, overrides));
}

}  // namespace qoda
