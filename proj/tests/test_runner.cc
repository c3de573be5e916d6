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

#include <algorithm>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "json.hpp"

#include "mdgan/runner.h"
#include "test_util.h"

namespace mdgan::runner {
namespace {

using mdgan::testing::read_file;
using mdgan::testing::scratch_dir;
using mdgan::testing::tiny_config;

long line_count(const std::string& text) { return std::count(text.begin(), text.end(), '\n'); }

TEST(RunSingle, WritesEveryArtifact) {
  const std::string dir = scratch_dir("run_single");
  ExperimentConfig c = tiny_config();
  c.n_freeriders = 1;
  c.defense = Defense::kDfg;
  run_single(c, dir);
  const RunArtifacts a = artifacts_in(dir);
  for (const std::string& p : {a.manifest, a.metrics_csv, a.roundlog_jsonl, a.samples_csv})
    EXPECT_TRUE(std::filesystem::exists(p)) << p;
  const auto manifest = nlohmann::json::parse(read_file(a.manifest));
  EXPECT_EQ(manifest["config"]["defense"], "dfg");
  EXPECT_EQ(manifest["seeds"].size(), 1u);
  const std::string metrics = read_file(a.metrics_csv);
  EXPECT_EQ(metrics.rfind("round,fd,", 0), 0u);
  EXPECT_EQ(line_count(read_file(a.roundlog_jsonl)), c.rounds);
  EXPECT_EQ(line_count(read_file(a.samples_csv)), c.sample_count + 1);
}

TEST(RunSingle, ByteIdenticalOnRerun) {
  ExperimentConfig c = tiny_config();
  c.n_freeriders = 2;
  c.protocol = Protocol::kSwap;
  c.defense = Defense::kDfgPlus;
  const std::string d1 = scratch_dir("rerun_a"), d2 = scratch_dir("rerun_b");
  run_single(c, d1);
  run_single(c, d2);
  const RunArtifacts a = artifacts_in(d1), b = artifacts_in(d2);
  EXPECT_EQ(read_file(a.metrics_csv), read_file(b.metrics_csv));
  EXPECT_EQ(read_file(a.roundlog_jsonl), read_file(b.roundlog_jsonl));
  EXPECT_EQ(read_file(a.samples_csv), read_file(b.samples_csv));
}

TEST(RunSingle, TimingColumnsOnRequest) {
  ExperimentConfig c = tiny_config();
  c.record_timing = true;
  const std::string dir = scratch_dir("timing");
  run_single(c, dir);
  const std::string rows = read_file(artifacts_in(dir).metrics_csv);
  const std::string last = rows.substr(rows.rfind('\n', rows.size() - 2) + 1);
  // The last two columns carry defense_ms and train_ms.
  EXPECT_EQ(last.find_last_not_of(",\n"), last.size() - 2);
  EXPECT_NE(last[last.size() - 2], ',');
  EXPECT_NE(read_file(artifacts_in(dir).roundlog_jsonl).find("train_ms"), std::string::npos);
}

TEST(EmitSamples, SingleSampleAndReplay) {
  Rng r = make_rng(1, {1});
  ExperimentConfig c;
  const nn::MlpNetwork g = nn::kaiming_init(c.generator_shape(), r);
  const std::string dir = scratch_dir("samples");
  emit_samples(g, 1, dir + "/a.csv", 4);
  emit_samples(g, 1, dir + "/b.csv", 4);
  emit_samples(g, 1, dir + "/c.csv", 5);
  const std::string a = read_file(dir + "/a.csv");
  EXPECT_EQ(line_count(a), 2);
  EXPECT_EQ(a.rfind("x,y\n", 0), 0u);
  EXPECT_EQ(a, read_file(dir + "/b.csv"));
  EXPECT_NE(a, read_file(dir + "/c.csv"));
  EXPECT_THROW(emit_samples(g, 0, dir + "/d.csv", 4), std::invalid_argument);
}

TEST(Sweep, OneRowPerDefenseAndCount) {
  SweepRequest req;
  req.base = tiny_config();
  req.base.rounds = 2;
  req.freerider_counts = {0, 2};
  req.seeds = {1, 2};
  req.defenses = {Defense::kNone, Defense::kDfg};
  req.out_dir = scratch_dir("sweep");
  const auto rows = run_sweep(req);
  ASSERT_EQ(rows.size(), 4u);
  for (const SweepRow& r : rows) {
    EXPECT_EQ(r.runs, 2);
    EXPECT_EQ(r.failures, 0);
    EXPECT_TRUE(r.mean_final_fd);
    EXPECT_EQ(r.mean_recall.has_value(), r.defense == Defense::kDfg && r.freeriders > 0);
  }
  EXPECT_FALSE(rows[0].mean_precision);
  const std::string summary = read_file(req.out_dir + "/sweep_summary.csv");
  EXPECT_EQ(line_count(summary), 5);
  EXPECT_TRUE(std::filesystem::exists(req.out_dir + "/dfg_fr2_seed2/metrics.csv"));
  const auto manifest = nlohmann::json::parse(read_file(req.out_dir + "/manifest.json"));
  EXPECT_EQ(manifest["runs"].size(), 8u);
}

TEST(Sweep, FailingRunIsRecordedAndSweepContinues) {
  SweepRequest req;
  req.base = tiny_config();
  req.base.rounds = 1;
  req.base.protocol = Protocol::kSimple;
  req.freerider_counts = {0};
  req.seeds = {1};
  req.defenses = {Defense::kDfgPlus, Defense::kNone};
  req.out_dir = scratch_dir("sweep_fail");
  const auto rows = run_sweep(req);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].failures, 1);
  EXPECT_NE(rows[0].errors.find("defense"), std::string::npos);
  EXPECT_EQ(rows[1].failures, 0);
}

TEST(Sweep, RejectsEmptyAxes) {
  SweepRequest req;
  req.base = tiny_config();
  req.seeds = {1};
  req.defenses = {Defense::kNone};
  req.out_dir = scratch_dir("sweep_empty");
  EXPECT_THROW(run_sweep(req), std::invalid_argument);
}

TEST(SummarizeDetection, PoolsOverProbes) {
  sim::ExperimentResult r;
  r.free_riders = {3, 4};
  sim::ProbeEvent p1, p2;
  p1.detection.flagged = {3, 4};
  p2.detection.flagged = {0, 3};
  r.probes = {p1, p2};
  const DetectionSummary s = summarize_detection(r);
  EXPECT_DOUBLE_EQ(*s.precision, 0.75);
  EXPECT_DOUBLE_EQ(*s.recall, 0.75);
  r.probes = {};
  EXPECT_FALSE(summarize_detection(r).precision);
}

TEST(ParseCountList, RangesAndLists) {
  EXPECT_EQ(parse_count_list("0..5"), (std::vector<int>{0, 1, 2, 3, 4, 5}));
  EXPECT_EQ(parse_count_list("3..3"), (std::vector<int>{3}));
  EXPECT_EQ(parse_count_list("0,3,5"), (std::vector<int>{0, 3, 5}));
  for (const char* bad : {"", "5..2", "a..3", "1,,2", "-1", "1,x"})
    EXPECT_THROW(parse_count_list(bad), std::invalid_argument) << bad;
}

}  // namespace
}  // namespace mdgan::runner
