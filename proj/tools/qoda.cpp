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

// qoda run <config|preset>      one experiment: metrics.csv, summary.json, config.ini
// qoda compare <config...>      runs several configs, prints comparison JSON
// qoda suite <name>             rate-suite | k-scaling | communication | layerwise

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qoda/qoda.hpp"

namespace {

qoda::RawConfig overrides_from(const std::vector<std::string>& sets,
                               const std::optional<std::uint64_t>& seed,
                               const std::optional<std::string>& out) {
  qoda::RawConfig o;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      qoda::fail(qoda::ErrorCode::kParseError, "--set expects key=value, got '" + s + "'");
    }
    o[qoda::detail::trim(s.substr(0, eq))] = {qoda::detail::trim(s.substr(eq + 1)), "--set"};
  }
  if (seed) o["run.seed"] = {std::to_string(*seed), "--seed"};
  if (out) {
    o["run.out"] = {*out, "--out"};
  } else if (const char* env = std::getenv("QODA_OUT_DIR"); env && *env) {
    o["run.out"] = {env, "QODA_OUT_DIR"};
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantized optimistic dual averaging experiments"};
  app.require_subcommand(1);

  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  auto common = [&](CLI::App* sub) {
    sub->add_option("-s,--set", sets, "Override a config key, e.g. --set noise.sigma=0.5");
    sub->add_option("--seed", seed, "Run seed");
    sub->add_option("--out", out, "Output directory");
  };

  std::string run_target;
  auto* run = app.add_subcommand("run", "Run one experiment");
  run->add_option("config", run_target, "Config file or experiment preset name")->required();
  common(run);

  std::vector<std::string> compare_targets;
  auto* cmp = app.add_subcommand("compare", "Run several configs and compare them");
  cmp->add_option("configs", compare_targets, "Config files or presets")->required();
  common(cmp);

  std::string suite_name;
  std::size_t seeds = 1;
  auto* suite = app.add_subcommand("suite", "Run a named suite");
  suite->add_option("name", suite_name, "rate-suite | k-scaling | communication | layerwise")
      ->required();
  suite->add_option("--seeds", seeds, "Seeds per cell")->check(CLI::PositiveNumber);
  common(suite);

  CLI11_PARSE(app, argc, argv);

  try {
    const auto o = overrides_from(sets, seed, out);
    if (*run) {
      const auto cfg = qoda::load_config(run_target, o);
      const auto summary = qoda::run_experiment(cfg, cfg.out);
      std::cout << summary.dump(2) << "\n";
    } else if (*cmp) {
      std::vector<qoda::ExperimentConfig> cfgs;
      for (const auto& t : compare_targets) cfgs.push_back(qoda::load_config(t, o));
      const auto result = qoda::compare(cfgs);
      const std::filesystem::path dir = cfgs.front().out;
      std::filesystem::create_directories(dir);
      qoda::write_text(dir / "compare.json", result.dump(2) + "\n");
      std::cout << result.dump(2) << "\n";
    } else if (*suite) {
      const auto base = qoda::resolve_config(qoda::layer_config({}, o));
      const auto result = qoda::run_suite(suite_name, base.seed, seeds, o);
      const std::filesystem::path dir = base.out;
      std::filesystem::create_directories(dir);
      qoda::write_text(dir / (suite_name + ".json"), result.dump(2) + "\n");
      std::cout << result.dump(2) << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "qoda: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
