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

#include "mdgan/gan.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mdgan/log.h"

namespace mdgan::gan {
namespace {

constexpr double kMinProb = 1e-300;

double clamp_prob(double p) { return std::clamp(p, kMinProb, 1.0 - 1e-16); }

void check_batches(const MlpNetwork& d, const Matrix& real, const Matrix& fake) {
  if (real.rows() != fake.rows())
    throw std::invalid_argument("real and fake batches differ in size");
  if (real.cols() != d.input_dim() || fake.cols() != d.input_dim())
    throw std::invalid_argument("batch width does not match discriminator input");
  if (d.output_dim() != 1)
    throw std::invalid_argument("discriminator must have a single output");
}

void check_output_matches(const MlpNetwork& d, const LossMode& mode) {
  const bool sigmoid = d.output_activation() == nn::OutputActivation::kSigmoid;
  if (mode.is_wgan() == sigmoid)
    throw std::invalid_argument(
        "discriminator output activation does not match loss mode " +
        to_string(mode));
}

}  // namespace

void LossMode::validate() const {
  if (kind == Kind::kWganClip && !(clip > 0.0))
    throw std::invalid_argument("wgan_clip requires clip > 0");
  if (kind == Kind::kWganGp && !(lambda_gp >= 0.0))
    throw std::invalid_argument("wgan_gp requires lambda_gp >= 0");
}

std::string to_string(const LossMode& mode) {
  switch (mode.kind) {
    case LossMode::Kind::kNsgan: return "nsgan";
    case LossMode::Kind::kWganClip: return "wgan_clip";
    case LossMode::Kind::kWganGp: return "wgan_gp";
  }
  return "unknown";
}

double discriminator_loss(const Vector& real_scores, const Vector& fake_scores,
                          const LossMode& mode) {
  if (real_scores.size() == 0 || fake_scores.size() == 0)
    throw std::invalid_argument("empty score vector");
  if (mode.is_wgan()) return fake_scores.mean() - real_scores.mean();
  double real_term = 0.0, fake_term = 0.0;
  for (double p : real_scores) real_term -= std::log(clamp_prob(p));
  for (double p : fake_scores) fake_term -= std::log(clamp_prob(1.0 - p));
  return real_term / real_scores.size() + fake_term / fake_scores.size();
}

double discriminator_step(MlpNetwork& discriminator, const Matrix& real,
                          const Matrix& fake, const LossMode& mode,
                          OptimizerState& optimizer, Rng& penalty_rng) {
  check_batches(discriminator, real, fake);
  check_output_matches(discriminator, mode);
  const Eigen::Index batch = real.rows();
  const double inv_b = 1.0 / static_cast<double>(batch);

  const Vector real_scores = discriminator.forward(real).col(0);
  const Vector fake_scores = discriminator.forward(fake).col(0);
  double loss = discriminator_loss(real_scores, fake_scores, mode);

  Matrix up_real(batch, 1), up_fake(batch, 1);
  if (mode.is_wgan()) {
    up_real.setConstant(-inv_b);
    up_fake.setConstant(inv_b);
  } else {
    for (Eigen::Index s = 0; s < batch; ++s) {
      up_real(s, 0) = -inv_b / clamp_prob(real_scores(s));
      up_fake(s, 0) = inv_b / clamp_prob(1.0 - fake_scores(s));
    }
  }
  nn::GradientSet grads = nn::forward_backward(discriminator, real, up_real).param_grads;
  grads += nn::forward_backward(discriminator, fake, up_fake).param_grads;

  if (mode.kind == LossMode::Kind::kWganGp && mode.lambda_gp > 0.0) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Matrix interp(batch, real.cols());
    for (Eigen::Index s = 0; s < batch; ++s) {
      const double eps = unif(penalty_rng);
      interp.row(s) = eps * real.row(s) + (1.0 - eps) * fake.row(s);
    }
    // First pass gives grad_x D; the penalty gradient w.r.t. the parameters is
    // the gradient of the directional derivative along
    //   v_s = (2 lambda / B) (|g_s| - 1) g_s / |g_s|.
    const Matrix zero_dir = Matrix::Zero(batch, real.cols());
    const Matrix g = nn::directional_derivative_param_grads(discriminator, interp,
                                                            zero_dir).input_grads;
    Matrix direction(batch, real.cols());
    double penalty = 0.0;
    for (Eigen::Index s = 0; s < batch; ++s) {
      const double norm = g.row(s).norm();
      penalty += (norm - 1.0) * (norm - 1.0);
      if (norm > 0.0)
        direction.row(s) = (2.0 * mode.lambda_gp * inv_b * (norm - 1.0) / norm) * g.row(s);
      else
        direction.row(s).setZero();
    }
    loss += mode.lambda_gp * penalty * inv_b;
    grads += nn::directional_derivative_param_grads(discriminator, interp, direction)
                 .param_grads;
  }

  if (!std::isfinite(loss)) {
    std::ostringstream msg;
    msg << "non-finite discriminator loss (" << to_string(mode) << ")";
    throw nn::NonFiniteError(msg.str());
  }
  nn::optimizer_step(discriminator, grads, optimizer);

  if (mode.kind == LossMode::Kind::kWganClip) {
    for (nn::Layer& layer : discriminator.mutable_layers()) {
      layer.weight = layer.weight.cwiseMax(-mode.clip).cwiseMin(mode.clip);
      layer.bias = layer.bias.cwiseMax(-mode.clip).cwiseMin(mode.clip);
    }
  }
  return loss;
}

Matrix generator_feedback(const MlpNetwork& discriminator, const Matrix& fake,
                          const LossMode& mode, Vector* scores) {
  if (fake.cols() != discriminator.input_dim())
    throw std::invalid_argument("fake batch width does not match discriminator input");
  if (discriminator.output_dim() != 1)
    throw std::invalid_argument("discriminator must have a single output");
  check_output_matches(discriminator, mode);
  const Eigen::Index batch = fake.rows();
  const double inv_b = 1.0 / static_cast<double>(batch);

  Matrix upstream(batch, 1);
  if (mode.is_wgan()) {
    upstream.setConstant(-inv_b);
    auto result = nn::forward_backward(discriminator, fake, upstream);
    if (scores) *scores = result.outputs.col(0);
    return std::move(result.input_grads);
  }
  // The upstream for -log p depends on p itself, so run the forward pass
  // first. Cheap at these sizes.
  const Vector p = discriminator.forward(fake).col(0);
  for (Eigen::Index s = 0; s < batch; ++s) upstream(s, 0) = -inv_b / clamp_prob(p(s));
  auto result = nn::forward_backward(discriminator, fake, upstream);
  if (scores) *scores = p;
  return std::move(result.input_grads);
}

std::optional<nn::GradientSet> accumulate_generator_gradient(
    const MlpNetwork& generator, std::span<const GeneratorContribution> contributions,
    const std::set<int>& included, Aggregation aggregation) {
  std::vector<const GeneratorContribution*> ordered;
  for (const GeneratorContribution& c : contributions)
    if (included.count(c.client)) ordered.push_back(&c);
  if (ordered.empty()) return std::nullopt;
  std::sort(ordered.begin(), ordered.end(),
            [](const auto* a, const auto* b) { return a->client < b->client; });
  for (size_t i = 1; i < ordered.size(); ++i)
    if (ordered[i]->client == ordered[i - 1]->client)
      throw std::invalid_argument("duplicate contribution from client " +
                                  std::to_string(ordered[i]->client));

  nn::GradientSet total = nn::GradientSet::zeros_like(generator);
  for (const GeneratorContribution* c : ordered) {
    if (c->latent.rows() != c->input_grads.rows() ||
        c->input_grads.cols() != generator.output_dim())
      throw std::invalid_argument("contribution from client " +
                                  std::to_string(c->client) +
                                  " has mismatched latent/gradient shapes");
    total += nn::forward_backward(generator, c->latent, c->input_grads).param_grads;
  }
  if (aggregation == Aggregation::kMean) total *= 1.0 / static_cast<double>(ordered.size());
  return total;
}

bool generator_update(MlpNetwork& generator,
                      std::span<const GeneratorContribution> contributions,
                      OptimizerState& optimizer, const std::set<int>& included,
                      Aggregation aggregation) {
  auto grads = accumulate_generator_gradient(generator, contributions, included,
                                             aggregation);
  if (!grads) {
    log::warning("generator update skipped: no included client contributions");
    return false;
  }
  nn::optimizer_step(generator, *grads, optimizer);
  return true;
}

}  // namespace mdgan::gan
