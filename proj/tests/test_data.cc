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
#include <array>
#include <cmath>
#include <numbers>
#include <tuple>
#include <vector>

#include <gtest/gtest.h>

#include "mdgan/data.h"

namespace mdgan::data {
namespace {

using Row = std::array<double, 3>;  // x, y, label

std::vector<Row> rows_of(const Matrix& points, const std::vector<int>& labels) {
  std::vector<Row> out;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    out.push_back({points(i, 0), points(i, 1), static_cast<double>(labels[i])});
  std::sort(out.begin(), out.end());
  return out;
}

TEST(RingDataset, SingleModeAtOriginIsIsotropic) {
  Rng rng(1);
  const RingDataset d = make_ring_dataset(1, 0.0, 0.1, 20000, rng);
  const Eigen::RowVector2d mean = d.points.colwise().mean();
  const Matrix centered = d.points.rowwise() - mean;
  const Matrix cov = centered.transpose() * centered / (d.points.rows() - 1);
  EXPECT_LT(mean.norm(), 0.005);
  // Truncation at 6 sigma removes a negligible mass.
  EXPECT_NEAR(cov(0, 0), 0.01, 0.0005);
  EXPECT_NEAR(cov(1, 1), 0.01, 0.0005);
  EXPECT_NEAR(cov(0, 1), 0.0, 0.0005);
}

TEST(RingDataset, CentersAreEquallySpaced) {
  Rng rng(1);
  const RingDataset d = make_ring_dataset(8, 2.0, 0.05, 80, rng);
  for (int k = 0; k < 8; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / 8;
    EXPECT_NEAR(d.mode_center(k).x(), 2.0 * std::cos(angle), 1e-12);
    EXPECT_NEAR(d.mode_center(k).y(), 2.0 * std::sin(angle), 1e-12);
  }
}

TEST(RingDataset, PerModeMeansNearCenters) {
  Rng rng(5);
  const RingDataset d = make_ring_dataset(8, 2.0, 0.05, 8000, rng);
  ASSERT_EQ(d.points.rows(), 8000);
  std::vector<Eigen::Vector2d> sum(8, Eigen::Vector2d::Zero());
  std::vector<int> count(8, 0);
  for (int i = 0; i < 8000; ++i) {
    sum[d.mode_labels[i]] += d.points.row(i).transpose();
    ++count[d.mode_labels[i]];
  }
  for (int k = 0; k < 8; ++k) {
    EXPECT_EQ(count[k], 1000);
    EXPECT_LT((sum[k] / count[k] - d.mode_center(k)).norm(), 0.01);
  }
}

TEST(RingDataset, PointsStayWithinSixSigma) {
  Rng rng(6);
  const RingDataset d = make_ring_dataset(8, 2.0, 0.05, 8000, rng);
  for (int i = 0; i < 8000; ++i)
    EXPECT_LE((d.points.row(i).transpose() - d.mode_center(d.mode_labels[i])).norm(), 0.3);
}

TEST(RingDataset, RejectsIndivisibleTotal) {
  Rng rng(1);
  EXPECT_THROW(make_ring_dataset(8, 2.0, 0.05, 801, rng), std::invalid_argument);
}

TEST(RingDataset, DeterministicInRng) {
  Rng a(9), b(9);
  EXPECT_EQ(make_ring_dataset(8, 2.0, 0.05, 800, a).points,
            make_ring_dataset(8, 2.0, 0.05, 800, b).points);
}

TEST(PartitionShards, EqualSizesAndModeCounts) {
  Rng rng(2);
  const RingDataset d = make_ring_dataset(8, 2.0, 0.05, 8000, rng);
  const auto shards = partition_shards(d, 5);
  ASSERT_EQ(shards.size(), 5u);
  for (int c = 0; c < 5; ++c) {
    EXPECT_EQ(shards[c].client_id, c);
    EXPECT_EQ(shards[c].size(), 1600);
    std::vector<int> per_mode(8, 0);
    for (int label : shards[c].mode_labels) ++per_mode[label];
    for (int k = 0; k < 8; ++k) EXPECT_EQ(per_mode[k], 200);
  }
}

TEST(PartitionShards, UnevenCountsDifferByAtMostOne) {
  Rng rng(2);
  const RingDataset d = make_ring_dataset(4, 1.0, 0.05, 44, rng);
  const auto shards = partition_shards(d, 3);
  for (int k = 0; k < 4; ++k) {
    std::vector<int> counts;
    for (const auto& s : shards)
      counts.push_back(static_cast<int>(std::count(s.mode_labels.begin(), s.mode_labels.end(), k)));
    const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
    EXPECT_LE(*hi - *lo, 1);
  }
}

TEST(PartitionShards, SingleClientKeepsDataset) {
  Rng rng(3);
  const RingDataset d = make_ring_dataset(8, 2.0, 0.05, 800, rng);
  const auto shards = partition_shards(d, 1);
  ASSERT_EQ(shards.size(), 1u);
  EXPECT_EQ(rows_of(shards[0].points, shards[0].mode_labels),
            rows_of(d.points, d.mode_labels));
}

TEST(PartitionShards, UnionRecoversDataset) {
  Rng rng(4);
  const RingDataset d = make_ring_dataset(8, 2.0, 0.05, 8000, rng);
  const auto shards = partition_shards(d, 5);
  std::vector<Row> all;
  for (const auto& s : shards) {
    const auto r = rows_of(s.points, s.mode_labels);
    all.insert(all.end(), r.begin(), r.end());
  }
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, rows_of(d.points, d.mode_labels));
}

TEST(PartitionShards, RejectsZeroClients) {
  Rng rng(4);
  const RingDataset d = make_ring_dataset(8, 2.0, 0.05, 80, rng);
  EXPECT_THROW(partition_shards(d, 0), std::invalid_argument);
}

ClientShard shard_of(int n) {
  ClientShard s;
  s.points.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    s.points(i, 0) = i;
    s.points(i, 1) = -i;
    s.mode_labels.push_back(0);
  }
  return s;
}

TEST(ShardSampler, FullBatchIsPermutedShard) {
  const ClientShard s = shard_of(10);
  const ShardSampler sampler(s, 10, Rng(3));
  ASSERT_EQ(sampler.batches_per_pass(), 1);
  std::vector<Row> batch = rows_of(sampler.batch(0), std::vector<int>(10, 0));
  EXPECT_EQ(batch, rows_of(s.points, s.mode_labels));
}

TEST(ShardSampler, OnePassCoversShardWithoutReplacement) {
  const ClientShard s = shard_of(40);
  const ShardSampler sampler(s, 8, Rng(5));
  ASSERT_EQ(sampler.batches_per_pass(), 5);
  std::vector<double> seen;
  for (int j = 0; j < 5; ++j) {
    const Matrix b = sampler.batch(j);
    ASSERT_EQ(b.rows(), 8);
    for (int r = 0; r < 8; ++r) seen.push_back(b(r, 0));
  }
  std::sort(seen.begin(), seen.end());
  for (int i = 0; i < 40; ++i) EXPECT_EQ(seen[i], i);
}

TEST(ShardSampler, ReplayWithSameSeed) {
  const ClientShard s = shard_of(40);
  for (uint64_t round : {1u, 2u}) {
    const ShardSampler a(s, 8, make_rng(11, {stream::kShardOrder, 0, round}));
    const ShardSampler b(s, 8, make_rng(11, {stream::kShardOrder, 0, round}));
    for (int j = 0; j < 5; ++j) EXPECT_EQ(a.batch(j), b.batch(j));
  }
}

TEST(ShardSampler, RejectsOversizedBatch) {
  const ClientShard s = shard_of(10);
  EXPECT_THROW(ShardSampler(s, 11, Rng(1)), std::invalid_argument);
}

TEST(SampleLatent, ShapeAndFinite) {
  Rng rng(1);
  const Matrix z = sample_latent(4, 3, rng);
  EXPECT_EQ(z.rows(), 3);
  EXPECT_EQ(z.cols(), 4);
  EXPECT_TRUE(z.allFinite());
}

TEST(SampleLatent, StandardNormalMoments) {
  Rng rng(1);
  const Matrix z = sample_latent(2, 50000, rng);
  EXPECT_NEAR(z.mean(), 0.0, 0.02);
  EXPECT_NEAR((z.array() * z.array()).mean(), 1.0, 0.02);
}

}  // namespace
}  // namespace mdgan::data
