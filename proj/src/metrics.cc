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

#include "mdgan/metrics.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace mdgan::metrics {
namespace {

std::optional<double> fraction(long part, long whole) {
  if (whole == 0) return std::nullopt;
  return static_cast<double>(part) / static_cast<double>(whole);
}

std::string optional_real(const std::optional<double>& v) {
  return v ? format_real(*v) : std::string();
}

}  // namespace

GaussianFit fit_gaussian(const Matrix& samples) {
  const Eigen::Index n = samples.rows();
  const Eigen::Index d = samples.cols();
  if (n < d + 1)
    throw std::invalid_argument("Gaussian fit needs at least " +
                                std::to_string(d + 1) + " samples, got " +
                                std::to_string(n));
  if (!samples.allFinite()) throw nn::NonFiniteError("non-finite samples");
  GaussianFit fit;
  fit.mean = samples.colwise().mean().transpose();
  const Matrix centered = samples.rowwise() - fit.mean.transpose();
  fit.covariance = centered.transpose() * centered / static_cast<double>(n - 1);
  return fit;
}

double frechet_distance(const GaussianFit& a, const GaussianFit& b,
                        double regularization) {
  const Eigen::Index d = a.mean.size();
  if (b.mean.size() != d || a.covariance.rows() != d || b.covariance.rows() != d)
    throw std::invalid_argument("Gaussian fits have different dimensions");
  const Matrix identity = Matrix::Identity(d, d);
  const Matrix s1 = 0.5 * (a.covariance + a.covariance.transpose()) + regularization * identity;
  const Matrix s2 = 0.5 * (b.covariance + b.covariance.transpose()) + regularization * identity;

  Eigen::SelfAdjointEigenSolver<Matrix> eig1(s1);
  const double scale = std::max({1.0, s1.norm(), s2.norm()});
  const double tol = 1e-10 * scale;
  if (eig1.eigenvalues().minCoeff() < -tol)
    throw std::domain_error("covariance is not positive semi-definite");
  const Vector root_vals = eig1.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Matrix root1 = eig1.eigenvectors() * root_vals.asDiagonal() *
                       eig1.eigenvectors().transpose();
  Matrix product = root1 * s2 * root1;
  product = 0.5 * (product + product.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(product, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -tol * scale)
    throw std::domain_error("covariance product is not positive semi-definite");
  const double trace_root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

  const double mean_term = (a.mean - b.mean).squaredNorm();
  const double value = mean_term + s1.trace() + s2.trace() - 2.0 * trace_root;
  // Rounding can leave a tiny negative value for coincident fits.
  return std::max(value, 0.0);
}

double frechet_distance(const Matrix& real, const Matrix& generated) {
  if (real.cols() != generated.cols())
    throw std::invalid_argument("sample sets have different dimensions");
  return frechet_distance(fit_gaussian(real), fit_gaussian(generated),
                          kCovarianceRegularization);
}

PrecisionRecall precision_recall(const std::set<int>& flagged,
                                 const std::set<int>& truth) {
  long hits = 0;
  for (int id : flagged) hits += truth.count(id);
  PrecisionRecall pr;
  pr.precision = fraction(hits, static_cast<long>(flagged.size()));
  pr.recall = fraction(hits, static_cast<long>(truth.size()));
  return pr;
}

std::optional<double> SwapActionStats::correct_fraction() const {
  return fraction(correct, attempts);
}
std::optional<double> SwapActionStats::wrong_prevention_fraction() const {
  return fraction(wrong_preventions, attempts);
}
std::optional<double> SwapActionStats::wrong_permission_fraction() const {
  return fraction(wrong_permissions, attempts);
}

SwapActionStats swap_action_stats(std::span<const SwapRecord> records) {
  SwapActionStats s;
  for (const SwapRecord& r : records) {
    ++s.attempts;
    const bool mixed = r.kind_a != r.kind_b;
    const bool both_benign = !mixed && r.kind_a == ClientKind::kBenign;
    if (r.executed) {
      if (mixed)
        ++s.wrong_permissions;
      else
        ++s.correct;
    } else if (mixed) {
      ++s.correct;
    } else if (both_benign) {
      ++s.wrong_preventions;
    } else {
      ++s.prevented_free_rider_pairs;
    }
  }
  return s;
}

OverheadTimer::Scope::Scope(OverheadTimer& timer, Phase phase)
    : timer_(timer), phase_(phase), start_(std::chrono::steady_clock::now()) {}

OverheadTimer::Scope::~Scope() {
  const auto elapsed = std::chrono::steady_clock::now() - start_;
  timer_.add(phase_, std::chrono::duration<double, std::milli>(elapsed).count());
}

void OverheadTimer::reset() {
  defense_ms_ = 0.0;
  train_ms_ = 0.0;
}

void OverheadTimer::add(Phase phase, double ms) {
  (phase == Phase::kDefense ? defense_ms_ : train_ms_) += ms;
}

std::string format_real(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("cannot format real");
  return std::string(buf, end);
}

void write_metrics_csv(std::span<const MetricsRecord> records,
                       const std::string& path, bool with_timing) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "round,fd,precision,recall,correct_frac,wrong_prevention_frac,"
         "wrong_permission_frac,defense_ms,train_ms\n";
  for (const MetricsRecord& r : records) {
    out << r.round << ',' << format_real(r.frechet_distance) << ','
        << optional_real(r.precision) << ',' << optional_real(r.recall) << ','
        << optional_real(r.swaps.correct_fraction()) << ','
        << optional_real(r.swaps.wrong_prevention_fraction()) << ','
        << optional_real(r.swaps.wrong_permission_fraction()) << ',';
    if (with_timing) out << format_real(r.defense_ms) << ',' << format_real(r.train_ms);
    else out << ',';
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace mdgan::metrics
