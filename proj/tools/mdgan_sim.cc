/*
 * Copyright 2026 The MD-GAN Simulator Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line experiment runner.
//
//   mdgan_sim run   --config PATH [--seed N --out DIR --protocol simple|swap
//                   --defense none|dfg|dfg_plus|dfg_adj --freeriders K --rounds T]
//   mdgan_sim sweep --config PATH --freeriders 0..5 --seeds 3 --out DIR
//                   [--defenses none,dfg]

#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mdgan/config.h"
#include "mdgan/log.h"
#include "mdgan/runner.h"

namespace {

using mdgan::ExperimentConfig;

struct CommonFlags {
  std::string config_path;
  std::string out = "out";
  std::vector<std::string> assignments;
  std::optional<uint64_t> seed;
  std::optional<std::string> protocol;
  std::optional<int> rounds;
  bool verbose = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "key=value configuration file");
  cmd->add_option("--out", flags.out, "output directory")->capture_default_str();
  cmd->add_option("--seed", flags.seed, "experiment seed (sweep: first seed)");
  cmd->add_option("--protocol", flags.protocol, "simple | swap");
  cmd->add_option("--rounds", flags.rounds, "training rounds");
  cmd->add_option("--set", flags.assignments, "extra key=value override (repeatable)");
  cmd->add_flag("-v,--verbose", flags.verbose, "debug logging");
}

std::map<std::string, std::string> overrides_from(const CommonFlags& flags) {
  std::map<std::string, std::string> out;
  for (const std::string& a : flags.assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--set expects key=value, got '" + a + "'");
    out[a.substr(0, eq)] = a.substr(eq + 1);
  }
  if (flags.seed) out["seed"] = std::to_string(*flags.seed);
  if (flags.protocol) out["protocol"] = *flags.protocol;
  if (flags.rounds) out["rounds"] = std::to_string(*flags.rounds);
  return out;
}

std::vector<mdgan::Defense> parse_defenses(const std::string& text) {
  std::vector<mdgan::Defense> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(mdgan::parse_defense(item));
  if (out.empty()) throw std::invalid_argument("empty defense list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MD-GAN free-rider simulator"};
  app.require_subcommand(1);
  app.footer("Configuration keys (file, --set, or the dedicated flags):\n" +
             mdgan::config_reference());

  CommonFlags run_flags;
  std::optional<std::string> run_defense;
  std::optional<int> run_freeriders;
  CLI::App* run = app.add_subcommand("run", "run one experiment");
  add_common(run, run_flags);
  run->add_option("--defense", run_defense, "none | dfg | dfg_plus | dfg_adj");
  run->add_option("--freeriders", run_freeriders, "number of free-riders");

  CommonFlags sweep_flags;
  std::string sweep_counts = "0..5";
  int sweep_seeds = 3;
  std::string sweep_defenses = "none";
  CLI::App* sweep = app.add_subcommand("sweep", "sweep free-rider counts and seeds");
  add_common(sweep, sweep_flags);
  sweep->add_option("--freeriders", sweep_counts, "counts, e.g. 0..5 or 0,3,5")
      ->capture_default_str();
  sweep->add_option("--seeds", sweep_seeds, "seeds per cell (consecutive from --seed)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sweep->add_option("--defenses", sweep_defenses, "comma-separated defenses")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      if (run_flags.verbose) mdgan::log::set_level(mdgan::log::Level::kDebug);
      auto overrides = overrides_from(run_flags);
      if (run_defense) overrides["defense"] = *run_defense;
      if (run_freeriders) overrides["n_freeriders"] = std::to_string(*run_freeriders);
      const ExperimentConfig config = mdgan::parse_config(run_flags.config_path, overrides);
      const auto result = mdgan::runner::run_single(config, run_flags.out);
      const auto det = mdgan::runner::summarize_detection(result);
      std::cout << "final frechet_distance " << result.metrics.back().frechet_distance
                << " (round 0: " << result.metrics.front().frechet_distance << ")\n";
      if (det.precision) std::cout << "detection precision " << *det.precision << "\n";
      if (det.recall) std::cout << "detection recall " << *det.recall << "\n";
      std::cout << "outputs in " << run_flags.out << "\n";
    } else if (*sweep) {
      if (sweep_flags.verbose) mdgan::log::set_level(mdgan::log::Level::kDebug);
      mdgan::runner::SweepRequest request;
      request.base = mdgan::parse_config(sweep_flags.config_path, overrides_from(sweep_flags));
      request.freerider_counts = mdgan::runner::parse_count_list(sweep_counts);
      for (int k = 0; k < sweep_seeds; ++k)
        request.seeds.push_back(request.base.seed + static_cast<uint64_t>(k));
      request.defenses = parse_defenses(sweep_defenses);
      request.out_dir = sweep_flags.out;
      const auto rows = mdgan::runner::run_sweep(request);
      int failures = 0;
      for (const auto& r : rows) failures += r.failures;
      std::cout << rows.size() << " sweep cells written to " << request.out_dir
                << "/sweep_summary.csv\n";
      if (failures > 0) {
        std::cerr << failures << " run(s) failed; see the errors column\n";
        return 1;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
