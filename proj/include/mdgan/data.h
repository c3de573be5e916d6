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

#ifndef MDGAN_DATA_H_
#define MDGAN_DATA_H_

#include <cstdint>
#include <string>
#include <vector>

#include "mdgan/nn.h"
#include "mdgan/random.h"

namespace mdgan::data {

using nn::Matrix;

// Gaussian blobs equally spaced on a circle. Point i belongs to mode i % K.
struct RingDataset {
  int modes = 0;
  double radius = 0.0;
  double mode_noise_std = 0.0;
  Matrix points;                // M x 2
  std::vector<int> mode_labels;  // M

  Eigen::Vector2d mode_center(int k) const;
};

struct ClientShard {
  int client_id = 0;
  Matrix points;
  std::vector<int> mode_labels;

  int size() const { return static_cast<int>(points.rows()); }
};

RingDataset make_ring_dataset(int modes, double radius, double noise_std,
                              int total_points, Rng& rng);

// Deals the points of every mode round-robin over the clients, so each shard
// holds the same number of points per mode (within one).
std::vector<ClientShard> partition_shards(const RingDataset& dataset,
                                          int n_benign);

// Mini-batch view over one shard for one round: the shard is permuted once
// per round and batch j is the j-th contiguous slice of that permutation.
class ShardSampler {
 public:
  ShardSampler(const ClientShard& shard, int batch_size, Rng rng);

  int batches_per_pass() const;
  Matrix batch(int index) const;

 private:
  const ClientShard* shard_;
  int batch_size_;
  std::vector<int> order_;
};

// B x latent_dim i.i.d. standard normal draws.
Matrix sample_latent(int latent_dim, int batch_size, Rng& rng);

void write_dataset_csv(const RingDataset& dataset, const std::string& path);

}  // namespace mdgan::data

#endif  // MDGAN_DATA_H_
