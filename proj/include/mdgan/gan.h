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

#ifndef MDGAN_GAN_H_
#define MDGAN_GAN_H_

#include <optional>
#include <set>
#include <span>
#include <string>

#include "mdgan/nn.h"
#include "mdgan/random.h"

namespace mdgan::gan {

using nn::Matrix;
using nn::MlpNetwork;
using nn::OptimizerState;
using nn::Vector;

struct LossMode {
  enum class Kind { kNsgan, kWganClip, kWganGp };
  Kind kind = Kind::kNsgan;
  double clip = 0.01;       // wgan_clip only
  double lambda_gp = 10.0;  // wgan_gp only

  static LossMode nsgan() { return {}; }
  static LossMode wgan_clip(double c) { return {Kind::kWganClip, c, 10.0}; }
  static LossMode wgan_gp(double lambda) { return {Kind::kWganGp, 0.01, lambda}; }

  bool is_wgan() const { return kind != Kind::kNsgan; }
  void validate() const;
};

std::string to_string(const LossMode& mode);

enum class Aggregation { kSum, kMean };

// Discriminator loss for the given scores, without touching any network.
//   nsgan: -mean log D(real) - mean log(1 - D(fake))
//   wgan:   mean D(fake) - mean D(real)
double discriminator_loss(const Vector& real_scores, const Vector& fake_scores,
                          const LossMode& mode);

// One optimizer step on D against real and fake batches of equal size.
// wgan_clip clamps every parameter to [-c, c] after the step; wgan_gp adds
// lambda * (|grad_x D(x_hat)| - 1)^2 on random interpolates drawn from
// penalty_rng. Returns the loss before the step. Throws nn::NonFiniteError on
// a non-finite loss.
double discriminator_step(MlpNetwork& discriminator, const Matrix& real,
                          const Matrix& fake, const LossMode& mode,
                          OptimizerState& optimizer, Rng& penalty_rng);

// Gradient of the generator loss with respect to the fake samples, evaluated
// through the discriminator only:
//   nsgan: d/dx of -mean log D(x)   (non-saturating form)
//   wgan:  d/dx of -mean D(x)
// `scores`, when given, receives D(x) for every sample.
Matrix generator_feedback(const MlpNetwork& discriminator, const Matrix& fake,
                          const LossMode& mode, Vector* scores = nullptr);

struct GeneratorContribution {
  int client = 0;
  Matrix latent;       // the latent batch that produced the fake batch
  Matrix input_grads;  // generator_feedback for that fake batch
};

// Back-propagates every included contribution through G and combines the
// resulting parameter gradients (sum or mean over included clients, in
// ascending client order). Returns nullopt if nothing is included.
std::optional<nn::GradientSet> accumulate_generator_gradient(
    const MlpNetwork& generator, std::span<const GeneratorContribution> contributions,
    const std::set<int>& included, Aggregation aggregation);

// accumulate_generator_gradient followed by one optimizer step. An empty
// included set skips the update with a warning and returns false.
bool generator_update(MlpNetwork& generator,
                      std::span<const GeneratorContribution> contributions,
                      OptimizerState& optimizer, const std::set<int>& included,
                      Aggregation aggregation);

}  // namespace mdgan::gan

#endif  // MDGAN_GAN_H_
