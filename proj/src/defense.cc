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

#include "mdgan/defense.h"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

#include "mdgan/data.h"
#include "mdgan/log.h"

namespace mdgan::defense {
namespace {

constexpr int kMaxLloydIterations = 100;

Matrix stack_rows(std::span<const Vector> vectors) {
  if (vectors.empty()) return Matrix();
  const Eigen::Index width = vectors.front().size();
  Matrix m(static_cast<Eigen::Index>(vectors.size()), width);
  for (size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].size() != width)
      throw std::invalid_argument("response vectors differ in length");
    m.row(static_cast<Eigen::Index>(i)) = vectors[i].transpose();
  }
  return m;
}

bool all_identical(const Matrix& points) {
  for (Eigen::Index i = 1; i < points.rows(); ++i)
    if ((points.row(i) - points.row(0)).norm() > kDegenerateEpsilon) return false;
  return true;
}

std::string ids_to_string(const std::set<int>& ids) {
  std::ostringstream out;
  out << '{';
  bool first = true;
  for (int id : ids) {
    out << (first ? "" : ",") << id;
    first = false;
  }
  out << '}';
  return out.str();
}

}  // namespace

double TwoMeansResult::within_cluster_sum_of_squares(const Matrix& points) const {
  double total = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    total += (points.row(i) - centers.row(assignment[i])).squaredNorm();
  return total;
}

double TwoMeansResult::cluster_mean_of(const Matrix& points, int cluster,
                                       int column) const {
  double sum = 0.0;
  int count = 0;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    if (assignment[i] == cluster) {
      sum += points(i, column);
      ++count;
    }
  return count == 0 ? 0.0 : sum / count;
}

namespace {

// Continues Lloyd from the first assignment of the start (seed_a, seed_b).
// When both clusters are non-empty the run depends on that assignment alone.
TwoMeansResult lloyd_from(const Matrix& points, Eigen::Index seed_a, Eigen::Index seed_b,
                          std::vector<int> first) {
  const Eigen::Index n = points.rows();
  TwoMeansResult result;
  result.centers.resize(2, points.cols());
  result.centers.row(0) = points.row(seed_a);
  result.centers.row(1) = points.row(seed_b);
  result.assignment = std::move(first);
  result.iterations = 1;

  for (int iter = 2;; ++iter) {
    for (int c = 0; c < 2; ++c) {
      Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(points.cols());
      int count = 0;
      for (Eigen::Index i = 0; i < n; ++i)
        if (result.assignment[i] == c) {
          sum += points.row(i);
          ++count;
        }
      if (count > 0) result.centers.row(c) = sum / count;
    }
    if (iter > kMaxLloydIterations) break;
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d0 = (points.row(i) - result.centers.row(0)).squaredNorm();
      const double d1 = (points.row(i) - result.centers.row(1)).squaredNorm();
      const int cluster = d1 < d0 ? 1 : 0;
      if (result.assignment[i] != cluster) {
        result.assignment[i] = cluster;
        changed = true;
      }
    }
    result.iterations = iter;
    if (!changed) break;
  }
  return result;
}

}  // namespace

TwoMeansResult two_means(const Matrix& points) {
  const Eigen::Index n = points.rows();
  if (n < 2)
    throw std::invalid_argument("2-means needs at least 2 points, got " +
                                std::to_string(n));
  if (!points.allFinite()) throw nn::NonFiniteError("2-means input is not finite");

  Matrix squared(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      squared(i, j) = (points.row(i) - points.row(j)).squaredNorm();

  Eigen::Index seed_a = 0, seed_b = 1;
  double farthest = -1.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (squared(i, j) > farthest) {
        farthest = squared(i, j);
        seed_a = i;
        seed_b = j;
      }

  auto first_assignment = [&](Eigen::Index a, Eigen::Index b) {
    std::vector<int> first(static_cast<size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) first[k] = squared(k, b) < squared(k, a) ? 1 : 0;
    return first;
  };

  std::set<std::vector<int>> tried;
  std::vector<int> first = first_assignment(seed_a, seed_b);
  tried.insert(first);
  TwoMeansResult best = lloyd_from(points, seed_a, seed_b, std::move(first));
  double best_cost = best.within_cluster_sum_of_squares(points);
  // Remaining point pairs as further starts; a start replaces the incumbent
  // only on a clear improvement so that rounding noise cannot flip results.
  // Starts that share a first assignment share the whole run.
  const double tolerance = 1e-12 * std::max(1.0, farthest);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (i == seed_a && j == seed_b) continue;
      if (squared(i, j) == 0.0) continue;
      first = first_assignment(i, j);
      if (!tried.insert(first).second) continue;
      TwoMeansResult candidate = lloyd_from(points, i, j, std::move(first));
      const double cost = candidate.within_cluster_sum_of_squares(points);
      if (cost < best_cost - tolerance) {
        best = std::move(candidate);
        best_cost = cost;
      }
    }
  return best;
}

Matrix pairwise_distance_matrix(std::span<const Vector> responses) {
  const Matrix r = stack_rows(responses);
  const Eigen::Index n = r.rows();
  Matrix v = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = (r.row(i) - r.row(j)).norm();
      v(i, j) = d;
      v(j, i) = d;
    }
  return v;
}

DetectionResult detect_free_riders(std::span<const ResponseVector> client_responses,
                                   const Vector& detector_response) {
  if (client_responses.empty())
    throw std::invalid_argument("detection needs at least one client response");
  std::vector<Vector> all;
  all.reserve(client_responses.size() + 1);
  for (const ResponseVector& r : client_responses) all.push_back(r.scores);
  all.push_back(detector_response);
  const Matrix points = stack_rows(all);
  const Eigen::Index detector_row = points.rows() - 1;

  DetectionResult out;
  if (all_identical(points)) {
    out.degenerate = true;
    log::warning("free-rider detection degenerate: all responses identical");
    return out;
  }
  // Lloyd under squared Euclidean distance is exactly 2-means on squared L2.
  const TwoMeansResult clusters = two_means(points);
  out.detector_cluster = clusters.assignment[detector_row];
  std::set<int> same_as_detector;
  for (size_t i = 0; i < client_responses.size(); ++i) {
    out.cluster_assignment[client_responses[i].client] = clusters.assignment[i];
    if (clusters.assignment[i] == out.detector_cluster)
      same_as_detector.insert(client_responses[i].client);
  }
  if (same_as_detector.size() == client_responses.size()) {
    out.degenerate = true;
    log::warning("free-rider detection degenerate: detector clustered with every client");
    return out;
  }
  out.flagged = std::move(same_as_detector);
  log::debug("free-rider detection flagged " + ids_to_string(out.flagged));
  return out;
}

ProbeSet make_probe_set(const MlpNetwork& generator, int probe_size, int round,
                        Rng& rng) {
  if (probe_size < 1) throw std::invalid_argument("probe size must be >= 1");
  ProbeSet probe;
  probe.round = round;
  probe.latent = data::sample_latent(generator.input_dim(), probe_size, rng);
  probe.samples = generator.forward(probe.latent);
  return probe;
}

DfgOutcome run_dfg(const MlpNetwork& generator, const ResponseCollector& collect,
                   const nn::NetworkShape& detector_shape, int probe_size,
                   int round, Rng& probe_rng, Rng& detector_rng) {
  if (probe_size < 1) throw std::invalid_argument("probe size must be >= 1");
  DfgOutcome out;
  out.probe = make_probe_set(generator, probe_size, round, probe_rng);
  out.responses = collect(out.probe);
  for (const ResponseVector& r : out.responses)
    if (r.scores.size() != probe_size || !r.scores.allFinite())
      throw std::runtime_error("client " + std::to_string(r.client) +
                               " returned a malformed probe response");
  const MlpNetwork detector = nn::kaiming_init(detector_shape, detector_rng);
  out.detector_response = detector.forward(out.probe.samples).col(0);
  out.detection = detect_free_riders(out.responses, out.detector_response);
  return out;
}

std::set<int> client_swap_gate(int self, const Vector& row) {
  const Eigen::Index n = row.size();
  if (self < 0 || self >= n) throw std::out_of_range("gate owner index out of range");
  std::vector<int> peers;
  for (Eigen::Index j = 0; j < n; ++j)
    if (j != self) peers.push_back(static_cast<int>(j));
  std::set<int> everyone(peers.begin(), peers.end());
  if (peers.size() < 2) return everyone;

  Matrix distances(static_cast<Eigen::Index>(peers.size()), 1);
  for (size_t k = 0; k < peers.size(); ++k)
    distances(static_cast<Eigen::Index>(k), 0) = row(peers[k]);
  if (!distances.allFinite()) throw nn::NonFiniteError("non-finite distance row");
  if (all_identical(distances)) return everyone;

  const TwoMeansResult clusters = two_means(distances);
  const double mean0 = clusters.cluster_mean_of(distances, 0);
  const double mean1 = clusters.cluster_mean_of(distances, 1);
  if (std::abs(mean0 - mean1) <= kDegenerateEpsilon) {
    log::warning("swap gate of client " + std::to_string(self) +
                 ": clusters have equal mean distance, allowing all peers");
    return everyone;
  }
  const int near = mean0 < mean1 ? 0 : 1;
  std::set<int> allowed;
  for (size_t k = 0; k < peers.size(); ++k)
    if (clusters.assignment[k] == near) allowed.insert(peers[k]);
  return allowed;
}

DetectionResult run_dfg_adj(std::span<const ResponseVector> client_responses) {
  if (client_responses.size() < 2)
    throw std::invalid_argument("detector-free detection needs at least 2 clients");
  std::vector<Vector> vectors;
  for (const ResponseVector& r : client_responses) vectors.push_back(r.scores);
  const Matrix v = pairwise_distance_matrix(vectors);
  const Matrix sums = v.rowwise().sum();

  DetectionResult out;
  if (all_identical(sums)) {
    out.degenerate = true;
    log::warning("detector-free detection degenerate: equal distance sums");
    return out;
  }
  const TwoMeansResult clusters = two_means(sums);
  const int far = clusters.cluster_mean_of(sums, 1) > clusters.cluster_mean_of(sums, 0)
                      ? 1
                      : 0;
  for (size_t i = 0; i < client_responses.size(); ++i) {
    out.cluster_assignment[client_responses[i].client] = clusters.assignment[i];
    if (clusters.assignment[i] == far) out.flagged.insert(client_responses[i].client);
  }
  return out;
}

}  // namespace mdgan::defense
