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

// Small fully-connected networks with exact reverse-mode gradients. Batches
// are row-major in the sense that every row of a matrix is one sample.

#ifndef MDGAN_NN_H_
#define MDGAN_NN_H_

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mdgan/random.h"

namespace mdgan::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class HiddenActivation { kLeakyRelu, kRelu, kTanh };
enum class OutputActivation { kIdentity, kSigmoid };

struct Layer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

struct NetworkShape {
  std::vector<int> dims;  // input, hidden..., output
  HiddenActivation hidden = HiddenActivation::kLeakyRelu;
  OutputActivation output = OutputActivation::kIdentity;
  double leaky_slope = 0.2;
  // Fixed, non-trainable factor applied to every input row before the first
  // layer.
  double input_scale = 1.0;
};

class MlpNetwork {
 public:
  MlpNetwork() = default;
  MlpNetwork(std::vector<Layer> layers, HiddenActivation hidden,
             OutputActivation output, double leaky_slope = 0.2,
             double input_scale = 1.0);

  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& mutable_layers() { return layers_; }
  HiddenActivation hidden_activation() const { return hidden_; }
  OutputActivation output_activation() const { return output_; }
  double leaky_slope() const { return leaky_slope_; }
  double input_scale() const { return input_scale_; }

  int input_dim() const;
  int output_dim() const;
  size_t parameter_count() const;

  // Forward pass only.
  Matrix forward(const Matrix& input) const;

  // Throws std::invalid_argument if the layers are not shape-compatible or
  // NonFiniteError if any parameter is not finite.
  void validate() const;

  // FNV-1a over the raw parameter bytes; used to assert that a network was
  // not touched by an operation.
  uint64_t weight_hash() const;

  bool operator==(const MlpNetwork& other) const;

 private:
  std::vector<Layer> layers_;
  HiddenActivation hidden_ = HiddenActivation::kLeakyRelu;
  OutputActivation output_ = OutputActivation::kIdentity;
  double leaky_slope_ = 0.2;
  double input_scale_ = 1.0;
};

struct LayerGradient {
  Matrix d_weight;
  Vector d_bias;
};

struct GradientSet {
  std::vector<LayerGradient> layers;

  static GradientSet zeros_like(const MlpNetwork& net);
  GradientSet& operator+=(const GradientSet& other);
  GradientSet& operator*=(double scale);
  bool all_finite() const;
};

struct ForwardBackwardResult {
  Matrix outputs;
  GradientSet param_grads;
  Matrix input_grads;
};

// Kaiming (He) normal initialization: weights ~ N(0, 2 / fan_in), zero biases.
MlpNetwork kaiming_init(const NetworkShape& shape, Rng& rng);

// Exact forward pass plus the reverse-mode derivatives of
// sum(outputs .* upstream) with respect to every parameter and every input.
ForwardBackwardResult forward_backward(const MlpNetwork& net,
                                       const Matrix& input,
                                       const Matrix& upstream);

// Gradient with respect to the parameters of
//   sum_s  direction_s . grad_x f(x_s)
// i.e. of the directional derivative of the network along a fixed per-sample
// direction. Computed by propagating tangents forward and then running the
// reverse sweep over the tangent-augmented graph. Requires a single output.
// Also returns the input gradients grad_x f(x_s) as a side product.
struct DirectionalResult {
  Matrix input_grads;      // B x d_in
  Vector directional;      // B, the value direction_s . grad_x f(x_s)
  GradientSet param_grads;
};
DirectionalResult directional_derivative_param_grads(const MlpNetwork& net,
                                                     const Matrix& input,
                                                     const Matrix& direction);

struct AdamParams {
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

enum class OptimizerKind { kSgd, kAdam };

class OptimizerState {
 public:
  OptimizerState() = default;
  OptimizerState(OptimizerKind kind, double learning_rate,
                 AdamParams adam = {});

  OptimizerKind kind() const { return kind_; }
  double learning_rate() const { return learning_rate_; }
  const AdamParams& adam() const { return adam_; }
  int64_t step_count() const { return step_; }

  // Drops the moment estimates and the step counter, e.g. after the network
  // the state belonged to was replaced by a swapped-in model.
  void reset();

 private:
  friend void optimizer_step(MlpNetwork&, const GradientSet&, OptimizerState&);

  OptimizerKind kind_ = OptimizerKind::kSgd;
  double learning_rate_ = 1e-3;
  AdamParams adam_;
  int64_t step_ = 0;
  GradientSet first_moment_;
  GradientSet second_moment_;
};

// One optimizer step. Non-finite gradients throw NonFiniteError and leave
// both the network and the state untouched.
void optimizer_step(MlpNetwork& net, const GradientSet& grads,
                    OptimizerState& state);

std::string to_string(HiddenActivation a);
std::string to_string(OutputActivation a);

}  // namespace mdgan::nn

#endif  // MDGAN_NN_H_
