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

#include "mdgan/runner.h"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mdgan/data.h"
#include "mdgan/log.h"
#include "mdgan/metrics.h"
#include "mdgan/random.h"

namespace mdgan::runner {
namespace fs = std::filesystem;
namespace {

std::optional<double> mean_of(const std::vector<double>& values) {
  if (values.empty()) return std::nullopt;
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

std::string optional_real(const std::optional<double>& v) {
  return v ? metrics::format_real(*v) : std::string();
}

std::string csv_escape(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

int parse_int(const std::string& text) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw std::invalid_argument("not an integer: '" + text + "'");
  return v;
}

}  // namespace

RunArtifacts artifacts_in(const std::string& directory) {
  const fs::path d(directory);
  return {directory, (d / "manifest.json").string(), (d / "metrics.csv").string(),
          (d / "roundlog.jsonl").string(), (d / "samples.csv").string()};
}

void write_manifest(const std::string& path, const ExperimentConfig& config,
                    const std::vector<uint64_t>& seeds, const std::string& out_dir,
                    const std::vector<RunArtifacts>& runs) {
  using nlohmann::json;
  json config_json = json::object();
  std::istringstream kv(config.to_key_values());
  std::string line;
  while (std::getline(kv, line)) {
    const auto eq = line.find('=');
    config_json[line.substr(0, eq)] = line.substr(eq + 1);
  }
  json runs_json = json::array();
  for (const RunArtifacts& r : runs)
    runs_json.push_back({{"directory", r.directory},
                         {"metrics", r.metrics_csv},
                         {"roundlog", r.roundlog_jsonl},
                         {"samples", r.samples_csv}});
  json manifest = {{"config", config_json},
                   {"seeds", seeds},
                   {"output_directory", out_dir},
                   {"runs", runs_json}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << manifest.dump(2) << '\n';
}

void emit_samples(const nn::MlpNetwork& generator, int n, const std::string& path,
                  uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample count must be >= 1");
  Rng rng = make_rng(seed, {stream::kSamples});
  const nn::Matrix points = generator.forward(data::sample_latent(generator.input_dim(), n, rng));
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "x,y\n";
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    out << metrics::format_real(points(i, 0)) << ',' << metrics::format_real(points(i, 1))
        << '\n';
  if (!out) throw std::runtime_error("failed writing " + path);
}

DetectionSummary summarize_detection(const sim::ExperimentResult& result) {
  long hits = 0, flagged = 0, truth = 0;
  for (const sim::ProbeEvent& p : result.probes) {
    for (int id : p.detection.flagged) hits += result.free_riders.count(id);
    flagged += static_cast<long>(p.detection.flagged.size());
    truth += static_cast<long>(result.free_riders.size());
  }
  DetectionSummary s;
  if (flagged > 0) s.precision = static_cast<double>(hits) / flagged;
  if (truth > 0) s.recall = static_cast<double>(hits) / truth;
  return s;
}

sim::ExperimentResult run_single(const ExperimentConfig& config, const std::string& out_dir) {
  config.validate();
  fs::create_directories(out_dir);
  const RunArtifacts paths = artifacts_in(out_dir);
  write_manifest(paths.manifest, config, {config.seed}, out_dir, {paths});
  sim::ExperimentResult result = sim::run_experiment(config);
  metrics::write_metrics_csv(result.metrics, paths.metrics_csv, config.record_timing);
  sim::write_round_log_jsonl(result.round_logs, paths.roundlog_jsonl, config.record_timing);
  emit_samples(result.generator, config.sample_count, paths.samples_csv, config.seed);
  return result;
}

std::vector<SweepRow> run_sweep(const SweepRequest& request) {
  if (request.freerider_counts.empty()) throw std::invalid_argument("no free-rider counts");
  if (request.seeds.empty()) throw std::invalid_argument("no seeds");
  if (request.defenses.empty()) throw std::invalid_argument("no defenses");
  fs::create_directories(request.out_dir);

  std::vector<RunArtifacts> planned;
  for (Defense d : request.defenses)
    for (int count : request.freerider_counts)
      for (uint64_t seed : request.seeds)
        planned.push_back(artifacts_in(
            (fs::path(request.out_dir) /
             (to_string(d) + "_fr" + std::to_string(count) + "_seed" + std::to_string(seed)))
                .string()));
  write_manifest((fs::path(request.out_dir) / "manifest.json").string(), request.base,
                 request.seeds, request.out_dir, planned);

  std::vector<SweepRow> rows;
  size_t run_index = 0;
  for (Defense d : request.defenses) {
    for (int count : request.freerider_counts) {
      SweepRow row;
      row.protocol = request.base.protocol;
      row.defense = d;
      row.freeriders = count;
      std::vector<double> fd, precision, recall, correct, wrong_prev, wrong_perm;
      for (uint64_t seed : request.seeds) {
        const RunArtifacts& paths = planned[run_index++];
        ++row.runs;
        try {
          ExperimentConfig config = request.base;
          config.defense = d;
          config.n_freeriders = count;
          config.seed = seed;
          const sim::ExperimentResult result = run_single(config, paths.directory);
          fd.push_back(result.metrics.back().frechet_distance);
          const DetectionSummary det = summarize_detection(result);
          if (det.precision) precision.push_back(*det.precision);
          if (det.recall) recall.push_back(*det.recall);
          const auto& swaps = result.metrics.back().swaps;
          if (auto v = swaps.correct_fraction()) correct.push_back(*v);
          if (auto v = swaps.wrong_prevention_fraction()) wrong_prev.push_back(*v);
          if (auto v = swaps.wrong_permission_fraction()) wrong_perm.push_back(*v);
        } catch (const std::exception& e) {
          ++row.failures;
          if (!row.errors.empty()) row.errors += "; ";
          row.errors += "seed " + std::to_string(seed) + ": " + e.what();
          log::error("sweep run " + paths.directory + " failed: " + e.what());
        }
      }
      row.mean_final_fd = mean_of(fd);
      row.mean_precision = mean_of(precision);
      row.mean_recall = mean_of(recall);
      row.mean_correct_frac = mean_of(correct);
      row.mean_wrong_prevention_frac = mean_of(wrong_prev);
      row.mean_wrong_permission_frac = mean_of(wrong_perm);
      rows.push_back(std::move(row));
    }
  }
  write_sweep_summary(rows, (fs::path(request.out_dir) / "sweep_summary.csv").string());
  return rows;
}

void write_sweep_summary(const std::vector<SweepRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "protocol,defense,freeriders,runs,failures,mean_final_fd,mean_precision,"
         "mean_recall,mean_correct_frac,mean_wrong_prevention_frac,"
         "mean_wrong_permission_frac,errors\n";
  for (const SweepRow& r : rows)
    out << to_string(r.protocol) << ',' << to_string(r.defense) << ',' << r.freeriders << ','
        << r.runs << ',' << r.failures << ',' << optional_real(r.mean_final_fd) << ','
        << optional_real(r.mean_precision) << ',' << optional_real(r.mean_recall) << ','
        << optional_real(r.mean_correct_frac) << ','
        << optional_real(r.mean_wrong_prevention_frac) << ','
        << optional_real(r.mean_wrong_permission_frac) << ',' << csv_escape(r.errors)
        << '\n';
  if (!out) throw std::runtime_error("failed writing " + path);
}

std::vector<int> parse_count_list(const std::string& text) {
  std::vector<int> out;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const int lo = parse_int(text.substr(0, dots));
    const int hi = parse_int(text.substr(dots + 2));
    if (lo < 0 || hi < lo) throw std::invalid_argument("bad range '" + text + "'");
    for (int v = lo; v <= hi; ++v) out.push_back(v);
    return out;
  }
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const int v = parse_int(item);
    if (v < 0) throw std::invalid_argument("counts must be >= 0");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("empty count list");
  return out;
}

}  // namespace mdgan::runner
