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

#include "mdgan/data.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace mdgan::data {

Eigen::Vector2d RingDataset::mode_center(int k) const {
  const double angle = 2.0 * std::numbers::pi * k / modes;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

RingDataset make_ring_dataset(int modes, double radius, double noise_std,
                              int total_points, Rng& rng) {
  if (modes < 1) throw std::invalid_argument("ring needs at least one mode");
  if (radius < 0.0) throw std::invalid_argument("ring radius must be >= 0");
  if (!(noise_std > 0.0)) throw std::invalid_argument("mode noise std must be > 0");
  if (total_points < 1 || total_points % modes != 0)
    throw std::invalid_argument("total_points (" + std::to_string(total_points) +
                                ") must be a positive multiple of the mode count (" +
                                std::to_string(modes) + ")");

  RingDataset ds;
  ds.modes = modes;
  ds.radius = radius;
  ds.mode_noise_std = noise_std;
  ds.points.resize(total_points, 2);
  ds.mode_labels.resize(total_points);
  std::normal_distribution<double> normal(0.0, noise_std);
  const double limit = 6.0 * noise_std;
  for (int i = 0; i < total_points; ++i) {
    const int k = i % modes;
    const Eigen::Vector2d c = ds.mode_center(k);
    double dx, dy;
    do {
      dx = normal(rng);
      dy = normal(rng);
    } while (std::hypot(dx, dy) > limit);
    ds.points(i, 0) = c.x() + dx;
    ds.points(i, 1) = c.y() + dy;
    ds.mode_labels[i] = k;
  }
  return ds;
}

std::vector<ClientShard> partition_shards(const RingDataset& dataset,
                                          int n_benign) {
  if (n_benign <= 0) throw std::invalid_argument("need at least one benign client");
  std::vector<std::vector<int>> members(n_benign);
  std::vector<int> seen_per_mode(dataset.modes, 0);
  // Round-robin per mode, offset by mode so remainders spread across clients.
  for (int i = 0; i < static_cast<int>(dataset.mode_labels.size()); ++i) {
    const int k = dataset.mode_labels[i];
    const int client = (seen_per_mode[k]++ + k) % n_benign;
    members[client].push_back(i);
  }
  std::vector<ClientShard> shards(n_benign);
  for (int c = 0; c < n_benign; ++c) {
    shards[c].client_id = c;
    shards[c].points.resize(static_cast<Eigen::Index>(members[c].size()), 2);
    shards[c].mode_labels.reserve(members[c].size());
    for (size_t r = 0; r < members[c].size(); ++r) {
      shards[c].points.row(static_cast<Eigen::Index>(r)) =
          dataset.points.row(members[c][r]);
      shards[c].mode_labels.push_back(dataset.mode_labels[members[c][r]]);
    }
  }
  return shards;
}

ShardSampler::ShardSampler(const ClientShard& shard, int batch_size, Rng rng)
    : shard_(&shard), batch_size_(batch_size), order_(shard.size()) {
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (batch_size > shard.size())
    throw std::invalid_argument("batch size " + std::to_string(batch_size) +
                                " exceeds shard size " +
                                std::to_string(shard.size()));
  std::iota(order_.begin(), order_.end(), 0);
  std::shuffle(order_.begin(), order_.end(), rng);
}

int ShardSampler::batches_per_pass() const {
  return static_cast<int>(order_.size()) / batch_size_;
}

Matrix ShardSampler::batch(int index) const {
  if (index < 0) throw std::out_of_range("negative batch index");
  // Past the end of one pass the permutation wraps around.
  Matrix out(batch_size_, 2);
  const size_t n = order_.size();
  for (int r = 0; r < batch_size_; ++r) {
    const size_t pos = (static_cast<size_t>(index) * batch_size_ + r) % n;
    out.row(r) = shard_->points.row(order_[pos]);
  }
  return out;
}

Matrix sample_latent(int latent_dim, int batch_size, Rng& rng) {
  if (latent_dim < 1 || batch_size < 1)
    throw std::invalid_argument("latent batch needs positive dimensions");
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(batch_size, latent_dim);
  for (int r = 0; r < batch_size; ++r)
    for (int c = 0; c < latent_dim; ++c) z(r, c) = normal(rng);
  return z;
}

void write_dataset_csv(const RingDataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.precision(17);
  out << "x,y,mode_label\n";
  for (Eigen::Index i = 0; i < dataset.points.rows(); ++i)
    out << dataset.points(i, 0) << ',' << dataset.points(i, 1) << ','
        << dataset.mode_labels[i] << '\n';
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace mdgan::data
