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

// Experiment runner behind the command-line tool: single runs, sweeps over
// free-rider counts, and the files they leave behind.

#ifndef MDGAN_RUNNER_H_
#define MDGAN_RUNNER_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mdgan/config.h"
#include "mdgan/experiment.h"

namespace mdgan::runner {

struct RunArtifacts {
  std::string directory;
  std::string manifest;
  std::string metrics_csv;
  std::string roundlog_jsonl;
  std::string samples_csv;
};

RunArtifacts artifacts_in(const std::string& directory);

// Writes manifest.json: the configuration snapshot, seeds, output directory
// and artifact paths. Written before a run or sweep starts.
void write_manifest(const std::string& path, const ExperimentConfig& config,
                    const std::vector<uint64_t>& seeds, const std::string& out_dir,
                    const std::vector<RunArtifacts>& runs);

// Writes `n` generator samples as "x,y" rows. The latent draw is seeded from
// `seed`, so the file is reproducible.
void emit_samples(const nn::MlpNetwork& generator, int n, const std::string& path,
                  uint64_t seed);

// Run-level detection quality pooled over every probe round.
struct DetectionSummary {
  std::optional<double> precision;
  std::optional<double> recall;
};
DetectionSummary summarize_detection(const sim::ExperimentResult& result);

// Creates `out_dir`, writes the manifest, runs, then writes metrics.csv,
// roundlog.jsonl and samples.csv.
sim::ExperimentResult run_single(const ExperimentConfig& config, const std::string& out_dir);

struct SweepRow {
  Protocol protocol = Protocol::kSimple;
  Defense defense = Defense::kNone;
  int freeriders = 0;
  int runs = 0;
  int failures = 0;
  std::optional<double> mean_final_fd;
  std::optional<double> mean_precision;
  std::optional<double> mean_recall;
  std::optional<double> mean_correct_frac;
  std::optional<double> mean_wrong_prevention_frac;
  std::optional<double> mean_wrong_permission_frac;
  std::string errors;
};

struct SweepRequest {
  ExperimentConfig base;
  std::vector<int> freerider_counts;
  std::vector<uint64_t> seeds;
  std::vector<Defense> defenses;
  std::string out_dir;
};

// Runs the cross product defenses x counts x seeds. A failing run is
// recorded in its row and the sweep carries on. Writes sweep_summary.csv
// with one row per (defense, count).
std::vector<SweepRow> run_sweep(const SweepRequest& request);

void write_sweep_summary(const std::vector<SweepRow>& rows, const std::string& path);

// "0..5" or "0,2,4" -> counts.
std::vector<int> parse_count_list(const std::string& text);

}  // namespace mdgan::runner

#endif  // MDGAN_RUNNER_H_
