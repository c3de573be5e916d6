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

#include "mdgan/nn.h"

#include <cmath>
#include <cstring>
#include <sstream>
#include <utility>

namespace mdgan::nn {
namespace {

using Array = Eigen::ArrayXXd;

enum class Act { kLeakyRelu, kRelu, kTanh, kIdentity, kSigmoid };

Act hidden_act(HiddenActivation a) {
  switch (a) {
    case HiddenActivation::kLeakyRelu: return Act::kLeakyRelu;
    case HiddenActivation::kRelu: return Act::kRelu;
    case HiddenActivation::kTanh: return Act::kTanh;
  }
  return Act::kIdentity;
}

Act output_act(OutputActivation a) {
  return a == OutputActivation::kSigmoid ? Act::kSigmoid : Act::kIdentity;
}

Act layer_act(const MlpNetwork& net, size_t k) {
  return k + 1 == net.layers().size() ? output_act(net.output_activation())
                                      : hidden_act(net.hidden_activation());
}

Array apply(Act act, const Array& a, double slope) {
  switch (act) {
    case Act::kLeakyRelu: return (a > 0.0).select(a, slope * a);
    case Act::kRelu: return a.max(0.0);
    case Act::kTanh: return a.tanh();
    case Act::kIdentity: return a;
    case Act::kSigmoid: return 1.0 / (1.0 + (-a).exp());
  }
  return a;
}

// First derivative, given pre-activation a and activation value h = act(a).
Array first_derivative(Act act, const Array& a, const Array& h, double slope) {
  switch (act) {
    case Act::kLeakyRelu:
      return (a > 0.0).select(Array::Ones(a.rows(), a.cols()),
                              Array::Constant(a.rows(), a.cols(), slope));
    case Act::kRelu: return (a > 0.0).cast<double>();
    case Act::kTanh: return 1.0 - h.square();
    case Act::kIdentity: return Array::Ones(a.rows(), a.cols());
    case Act::kSigmoid: return h * (1.0 - h);
  }
  return Array::Ones(a.rows(), a.cols());
}

Array second_derivative(Act act, const Array& a, const Array& h) {
  switch (act) {
    case Act::kLeakyRelu:
    case Act::kRelu:
    case Act::kIdentity: return Array::Zero(a.rows(), a.cols());
    case Act::kTanh: return -2.0 * h * (1.0 - h.square());
    case Act::kSigmoid: return h * (1.0 - h) * (1.0 - 2.0 * h);
  }
  return Array::Zero(a.rows(), a.cols());
}

void check_input(const MlpNetwork& net, const Matrix& input) {
  if (net.layers().empty()) throw std::invalid_argument("network has no layers");
  if (input.rows() == 0) throw std::invalid_argument("empty input batch");
  if (input.cols() != net.input_dim()) {
    std::ostringstream msg;
    msg << "input has " << input.cols() << " columns, network expects "
        << net.input_dim();
    throw std::invalid_argument(msg.str());
  }
  if (!input.allFinite()) throw NonFiniteError("non-finite network input");
}

// Pre-activations and activations of every layer; activations[0] is the input.
struct Trace {
  std::vector<Array> pre;
  std::vector<Matrix> post;
};

Trace run_forward(const MlpNetwork& net, const Matrix& input) {
  Trace trace;
  trace.post.reserve(net.layers().size() + 1);
  trace.pre.reserve(net.layers().size());
  trace.post.push_back(input * net.input_scale());
  for (size_t k = 0; k < net.layers().size(); ++k) {
    const Layer& layer = net.layers()[k];
    Matrix a = trace.post.back() * layer.weight.transpose();
    a.rowwise() += layer.bias.transpose();
    trace.post.push_back(apply(layer_act(net, k), a.array(), net.leaky_slope()).matrix());
    trace.pre.push_back(std::move(a).array());
  }
  return trace;
}

}  // namespace

MlpNetwork::MlpNetwork(std::vector<Layer> layers, HiddenActivation hidden,
                       OutputActivation output, double leaky_slope,
                       double input_scale)
    : layers_(std::move(layers)),
      hidden_(hidden),
      output_(output),
      leaky_slope_(leaky_slope),
      input_scale_(input_scale) {
  validate();
}

int MlpNetwork::input_dim() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.front().weight.cols());
}

int MlpNetwork::output_dim() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.back().weight.rows());
}

size_t MlpNetwork::parameter_count() const {
  size_t n = 0;
  for (const Layer& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

Matrix MlpNetwork::forward(const Matrix& input) const {
  check_input(*this, input);
  Matrix h = input * input_scale_;
  for (size_t k = 0; k < layers_.size(); ++k) {
    Matrix a = h * layers_[k].weight.transpose();
    a.rowwise() += layers_[k].bias.transpose();
    h = apply(layer_act(*this, k), a.array(), leaky_slope_).matrix();
  }
  return h;
}

void MlpNetwork::validate() const {
  if (!(input_scale_ > 0.0) || !std::isfinite(input_scale_))
    throw std::invalid_argument("input scale must be positive and finite");
  for (size_t k = 0; k < layers_.size(); ++k) {
    const Layer& l = layers_[k];
    if (l.weight.rows() == 0 || l.weight.cols() == 0)
      throw std::invalid_argument("layer " + std::to_string(k) + " is empty");
    if (l.bias.size() != l.weight.rows())
      throw std::invalid_argument("layer " + std::to_string(k) +
                                  ": bias length does not match weight rows");
    if (k > 0 && l.weight.cols() != layers_[k - 1].weight.rows())
      throw std::invalid_argument("layer " + std::to_string(k) +
                                  ": input width does not match previous layer");
    if (!l.weight.allFinite() || !l.bias.allFinite())
      throw NonFiniteError("layer " + std::to_string(k) +
                           " has non-finite parameters");
  }
}

uint64_t MlpNetwork::weight_hash() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const double* data, Eigen::Index n) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(data);
    for (size_t i = 0; i < static_cast<size_t>(n) * sizeof(double); ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const Layer& l : layers_) {
    feed(l.weight.data(), l.weight.size());
    feed(l.bias.data(), l.bias.size());
  }
  return h;
}

bool MlpNetwork::operator==(const MlpNetwork& other) const {
  if (layers_.size() != other.layers_.size() || hidden_ != other.hidden_ ||
      output_ != other.output_ || leaky_slope_ != other.leaky_slope_ ||
      input_scale_ != other.input_scale_)
    return false;
  for (size_t k = 0; k < layers_.size(); ++k) {
    const Layer& a = layers_[k];
    const Layer& b = other.layers_[k];
    if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols())
      return false;
    if (a.weight != b.weight || a.bias != b.bias) return false;
  }
  return true;
}

GradientSet GradientSet::zeros_like(const MlpNetwork& net) {
  GradientSet g;
  g.layers.reserve(net.layers().size());
  for (const Layer& l : net.layers())
    g.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()),
                        Vector::Zero(l.bias.size())});
  return g;
}

GradientSet& GradientSet::operator+=(const GradientSet& other) {
  if (other.layers.size() != layers.size())
    throw std::invalid_argument("gradient sets have different depth");
  for (size_t k = 0; k < layers.size(); ++k) {
    layers[k].d_weight += other.layers[k].d_weight;
    layers[k].d_bias += other.layers[k].d_bias;
  }
  return *this;
}

GradientSet& GradientSet::operator*=(double scale) {
  for (LayerGradient& l : layers) {
    l.d_weight *= scale;
    l.d_bias *= scale;
  }
  return *this;
}

bool GradientSet::all_finite() const {
  for (const LayerGradient& l : layers)
    if (!l.d_weight.allFinite() || !l.d_bias.allFinite()) return false;
  return true;
}

MlpNetwork kaiming_init(const NetworkShape& shape, Rng& rng) {
  if (shape.dims.size() < 2)
    throw std::invalid_argument("network shape needs at least two dimensions");
  for (int d : shape.dims)
    if (d <= 0)
      throw std::invalid_argument("network dimensions must be positive, got " +
                                  std::to_string(d));
  std::vector<Layer> layers;
  for (size_t k = 0; k + 1 < shape.dims.size(); ++k) {
    const int fan_in = shape.dims[k];
    const int fan_out = shape.dims[k + 1];
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
    Layer layer{Matrix(fan_out, fan_in), Vector::Zero(fan_out)};
    // Row-major fill order keeps the draw sequence independent of Eigen's
    // storage order.
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) layer.weight(r, c) = normal(rng);
    layers.push_back(std::move(layer));
  }
  return MlpNetwork(std::move(layers), shape.hidden, shape.output,
                    shape.leaky_slope, shape.input_scale);
}

ForwardBackwardResult forward_backward(const MlpNetwork& net,
                                       const Matrix& input,
                                       const Matrix& upstream) {
  check_input(net, input);
  if (upstream.rows() != input.rows() || upstream.cols() != net.output_dim())
    throw std::invalid_argument("upstream gradient shape does not match outputs");
  if (!upstream.allFinite()) throw NonFiniteError("non-finite upstream gradient");

  Trace trace = run_forward(net, input);
  const size_t depth = net.layers().size();
  ForwardBackwardResult result;
  result.outputs = trace.post.back();
  result.param_grads.layers.resize(depth);

  Matrix grad = upstream;
  for (size_t k = depth; k-- > 0;) {
    const Layer& layer = net.layers()[k];
    const Array d_act = first_derivative(layer_act(net, k), trace.pre[k],
                                         trace.post[k + 1].array(),
                                         net.leaky_slope());
    const Matrix d_pre = (grad.array() * d_act).matrix();
    result.param_grads.layers[k].d_weight = d_pre.transpose() * trace.post[k];
    result.param_grads.layers[k].d_bias = d_pre.colwise().sum().transpose();
    grad = d_pre * layer.weight;
  }
  result.input_grads = grad * net.input_scale();
  return result;
}

DirectionalResult directional_derivative_param_grads(const MlpNetwork& net,
                                                     const Matrix& input,
                                                     const Matrix& direction) {
  check_input(net, input);
  if (net.output_dim() != 1)
    throw std::invalid_argument("directional derivative needs a scalar output");
  if (direction.rows() != input.rows() || direction.cols() != input.cols())
    throw std::invalid_argument("direction shape does not match input");
  if (!direction.allFinite()) throw NonFiniteError("non-finite direction");

  const size_t depth = net.layers().size();
  const double slope = net.leaky_slope();
  Trace trace = run_forward(net, input);

  // Tangent sweep: dot_post[k] is the derivative of layer k's activation
  // along the per-sample input direction.
  std::vector<Matrix> dot_post(depth + 1);
  std::vector<Array> dot_pre(depth);
  std::vector<Array> d1(depth), d2(depth);
  dot_post[0] = direction * net.input_scale();
  for (size_t k = 0; k < depth; ++k) {
    const Act act = layer_act(net, k);
    d1[k] = first_derivative(act, trace.pre[k], trace.post[k + 1].array(), slope);
    d2[k] = second_derivative(act, trace.pre[k], trace.post[k + 1].array());
    dot_pre[k] = (dot_post[k] * net.layers()[k].weight.transpose()).array();
    dot_post[k + 1] = (d1[k] * dot_pre[k]).matrix();
  }

  DirectionalResult result;
  result.directional = dot_post[depth].col(0);
  result.param_grads.layers.resize(depth);

  // Reverse sweep of S = sum_s dot_post[depth](s) over the augmented graph.
  const Eigen::Index batch = input.rows();
  Matrix adj_post = Matrix::Zero(batch, 1);
  Matrix adj_dot_post = Matrix::Ones(batch, 1);
  for (size_t k = depth; k-- > 0;) {
    const Layer& layer = net.layers()[k];
    const Matrix adj_pre =
        (d1[k] * adj_post.array() + d2[k] * dot_pre[k] * adj_dot_post.array())
            .matrix();
    const Matrix adj_dot_pre = (d1[k] * adj_dot_post.array()).matrix();
    result.param_grads.layers[k].d_weight =
        adj_pre.transpose() * trace.post[k] + adj_dot_pre.transpose() * dot_post[k];
    result.param_grads.layers[k].d_bias = adj_pre.colwise().sum().transpose();
    adj_post = adj_pre * layer.weight;
    adj_dot_post = adj_dot_pre * layer.weight;
  }

  // grad_x f per sample, by a plain reverse sweep with unit upstream.
  Matrix grad = Matrix::Ones(batch, 1);
  for (size_t k = depth; k-- > 0;)
    grad = (grad.array() * d1[k]).matrix() * net.layers()[k].weight;
  result.input_grads = grad * net.input_scale();
  return result;
}

OptimizerState::OptimizerState(OptimizerKind kind, double learning_rate,
                               AdamParams adam)
    : kind_(kind), learning_rate_(learning_rate), adam_(adam) {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("learning rate must be positive and finite");
}

void OptimizerState::reset() {
  step_ = 0;
  first_moment_.layers.clear();
  second_moment_.layers.clear();
}

void optimizer_step(MlpNetwork& net, const GradientSet& grads,
                    OptimizerState& state) {
  auto& layers = net.mutable_layers();
  if (grads.layers.size() != layers.size())
    throw std::invalid_argument("gradient depth does not match network");
  for (size_t k = 0; k < layers.size(); ++k) {
    if (grads.layers[k].d_weight.rows() != layers[k].weight.rows() ||
        grads.layers[k].d_weight.cols() != layers[k].weight.cols() ||
        grads.layers[k].d_bias.size() != layers[k].bias.size())
      throw std::invalid_argument("gradient shape does not match layer " +
                                  std::to_string(k));
  }
  if (!grads.all_finite())
    throw NonFiniteError("non-finite gradient at optimizer step " +
                         std::to_string(state.step_ + 1));

  const double lr = state.learning_rate_;
  if (state.kind_ == OptimizerKind::kSgd) {
    for (size_t k = 0; k < layers.size(); ++k) {
      layers[k].weight -= lr * grads.layers[k].d_weight;
      layers[k].bias -= lr * grads.layers[k].d_bias;
    }
    ++state.step_;
    return;
  }

  if (state.first_moment_.layers.size() != layers.size()) {
    state.first_moment_ = GradientSet::zeros_like(net);
    state.second_moment_ = GradientSet::zeros_like(net);
  }
  const AdamParams& p = state.adam_;
  ++state.step_;
  const double correction1 = 1.0 - std::pow(p.beta1, static_cast<double>(state.step_));
  const double correction2 = 1.0 - std::pow(p.beta2, static_cast<double>(state.step_));
  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = p.beta1 * m + (1.0 - p.beta1) * g;
    v = p.beta2 * v + (1.0 - p.beta2) * g.cwiseProduct(g);
    param.array() -= lr * (m.array() / correction1) /
                     ((v.array() / correction2).sqrt() + p.eps);
  };
  for (size_t k = 0; k < layers.size(); ++k) {
    update(layers[k].weight, grads.layers[k].d_weight,
           state.first_moment_.layers[k].d_weight,
           state.second_moment_.layers[k].d_weight);
    update(layers[k].bias, grads.layers[k].d_bias,
           state.first_moment_.layers[k].d_bias,
           state.second_moment_.layers[k].d_bias);
  }
}

std::string to_string(HiddenActivation a) {
  switch (a) {
    case HiddenActivation::kLeakyRelu: return "leaky_relu";
    case HiddenActivation::kRelu: return "relu";
    case HiddenActivation::kTanh: return "tanh";
  }
  return "unknown";
}

std::string to_string(OutputActivation a) {
  return a == OutputActivation::kSigmoid ? "sigmoid" : "identity";
}

}  // namespace mdgan::nn
