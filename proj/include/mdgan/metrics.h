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

#ifndef MDGAN_METRICS_H_
#define MDGAN_METRICS_H_

#include <chrono>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mdgan/nn.h"
#include "mdgan/roles.h"

namespace mdgan::metrics {

using nn::Matrix;
using nn::Vector;

// Added to both covariance fits before the matrix square root.
inline constexpr double kCovarianceRegularization = 1e-6;

struct GaussianFit {
  Vector mean;
  Matrix covariance;
};

// Sample mean and unbiased sample covariance of the rows of `samples`.
GaussianFit fit_gaussian(const Matrix& samples);

// ||mu1 - mu2||^2 + tr(S1 + S2 - 2 (S1 S2)^{1/2}), with `regularization` * I
// added to both covariances first. The trace of the principal square root is
// taken from the eigenvalues of the symmetric matrix S1^{1/2} S2 S1^{1/2},
// which is similar to S1 S2.
double frechet_distance(const GaussianFit& a, const GaussianFit& b,
                        double regularization = 0.0);

// Fréchet distance between Gaussian fits of two sample sets (rows are
// samples), regularized with kCovarianceRegularization.
double frechet_distance(const Matrix& real, const Matrix& generated);

struct PrecisionRecall {
  std::optional<double> precision;  // absent when nothing was flagged
  std::optional<double> recall;     // absent when there are no free-riders
};

PrecisionRecall precision_recall(const std::set<int>& flagged,
                                 const std::set<int>& truth);

struct SwapRecord {
  int round = 0;
  int client_a = 0;
  int client_b = 0;
  ClientKind kind_a = ClientKind::kBenign;
  ClientKind kind_b = ClientKind::kBenign;
  bool executed = false;
};

struct SwapActionStats {
  long attempts = 0;
  long correct = 0;                   // same-kind executed, or mixed refused
  long wrong_preventions = 0;         // benign-benign refused
  long wrong_permissions = 0;         // benign-free-rider executed
  long prevented_free_rider_pairs = 0;

  std::optional<double> correct_fraction() const;
  std::optional<double> wrong_prevention_fraction() const;
  std::optional<double> wrong_permission_fraction() const;
};

SwapActionStats swap_action_stats(std::span<const SwapRecord> records);

// Wall-clock accounting for one round, split into defense and training time.
class OverheadTimer {
 public:
  enum class Phase { kDefense, kTraining };

  class Scope {
   public:
    Scope(OverheadTimer& timer, Phase phase);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    OverheadTimer& timer_;
    Phase phase_;
    std::chrono::steady_clock::time_point start_;
  };

  void reset();
  void add(Phase phase, double ms);
  double defense_ms() const { return defense_ms_; }
  double train_ms() const { return train_ms_; }

 private:
  double defense_ms_ = 0.0;
  double train_ms_ = 0.0;
};

struct MetricsRecord {
  int round = 0;
  double frechet_distance = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
  SwapActionStats swaps;  // cumulative up to and including this round
  double defense_ms = 0.0;
  double train_ms = 0.0;
};

// Writes metrics.csv. When `with_timing` is false the two wall-clock columns
// are left empty so the file is a pure function of the configuration.
void write_metrics_csv(std::span<const MetricsRecord> records,
                       const std::string& path, bool with_timing);

// Shortest round-trip decimal form, used for every real in output files.
std::string format_real(double value);

}  // namespace mdgan::metrics

#endif  // MDGAN_METRICS_H_
