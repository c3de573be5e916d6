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

// Free-rider detection by clustering discriminator responses on a shared
// probe set, with a randomly initialized reference discriminator (the
// detector) anchoring the free-rider cluster.

#ifndef MDGAN_DEFENSE_H_
#define MDGAN_DEFENSE_H_

#include <functional>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "mdgan/nn.h"
#include "mdgan/random.h"

namespace mdgan::defense {

using nn::Matrix;
using nn::MlpNetwork;
using nn::Vector;

// Points closer than this (L2) are considered identical.
inline constexpr double kDegenerateEpsilon = 1e-9;

struct TwoMeansResult {
  std::vector<int> assignment;  // 0 or 1 per point
  Matrix centers;               // 2 x d
  int iterations = 0;

  double within_cluster_sum_of_squares(const Matrix& points) const;
  double cluster_mean_of(const Matrix& points, int cluster, int column = 0) const;
};

// Lloyd iteration under squared Euclidean distance on the rows of `points`.
// The first start is the two points at maximum pairwise distance (first such
// pair in lexicographic index order); every other pair of distinct points is
// then tried as a start and the lowest within-cluster sum of squares is kept,
// earlier starts winning ties. Assignment ties go to cluster 0. Each run stops
// when the assignment is stable or after 100 iterations. An emptied cluster
// keeps its previous center.
TwoMeansResult two_means(const Matrix& points);

struct ProbeSet {
  int round = 0;
  Matrix latent;   // |S| x latent_dim, the draw that produced `samples`
  Matrix samples;  // |S| x 2
};

// Draws a fresh probe set from the current generator.
ProbeSet make_probe_set(const MlpNetwork& generator, int probe_size, int round,
                        Rng& rng);

struct ResponseVector {
  int client = 0;
  Vector scores;  // D_i(s_k) for every probe sample
};

struct DetectionResult {
  std::set<int> flagged;
  std::map<int, int> cluster_assignment;  // client id -> 0/1
  int detector_cluster = -1;              // -1 when no detector took part
  bool degenerate = false;
};

// Symmetric matrix of plain L2 distances between response vectors, in the
// order given (the detector, when present, is the last entry).
Matrix pairwise_distance_matrix(std::span<const Vector> responses);

// DFG clustering step: 2-means over the client responses plus the detector's
// response; every client sharing the detector's cluster is flagged. A
// degenerate clustering (all responses identical, or the detector's cluster
// holding every client) flags nobody.
DetectionResult detect_free_riders(std::span<const ResponseVector> client_responses,
                                   const Vector& detector_response);

// Full probe round on the generator side: draws the probe set from G,
// gathers one response per client through `collect`, scores the probe with a
// freshly Kaiming-initialized detector and clusters.
struct DfgOutcome {
  ProbeSet probe;
  std::vector<ResponseVector> responses;
  Vector detector_response;
  DetectionResult detection;
};
using ResponseCollector =
    std::function<std::vector<ResponseVector>(const ProbeSet& probe)>;
DfgOutcome run_dfg(const MlpNetwork& generator, const ResponseCollector& collect,
                   const nn::NetworkShape& detector_shape, int probe_size,
                   int round, Rng& probe_rng, Rng& detector_rng);

// Client-side swap gate. `row` is the client's row of the distance matrix
// (including its own zero entry at `self`). Returns the indices of the peers
// in the cluster with the lower mean distance. With fewer than two peers, or
// when the split is undefined (all distances equal, or equal cluster means),
// every peer is allowed.
std::set<int> client_swap_gate(int self, const Vector& row);

// Detector-free ablation: cluster each client's summed L2 distance to all
// other clients and flag the cluster with the higher mean.
DetectionResult run_dfg_adj(std::span<const ResponseVector> client_responses);

}  // namespace mdgan::defense

#endif  // MDGAN_DEFENSE_H_
