#include "owr/embedding.hpp"

#include "owr/error.hpp"

#include <cmath>
#include <random>
#include <string>

namespace owr {

namespace {

bool shapes_match(const LayerGradient& g, const DenseLayer& layer) {
  return g.weight.rows() == layer.weight.rows() && g.weight.cols() == layer.weight.cols() &&
         g.bias.size() == layer.bias.size();
}

}  // namespace

ParameterGradients& ParameterGradients::operator+=(const ParameterGradients& other) {
  if (layers_.empty()) {
    layers_ = other.layers_;
    return *this;
  }
  if (other.layers_.size() != layers_.size()) {
    fail(ErrorKind::Shape, "gradient accumulation across different architectures");
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].weight += other.layers_[i].weight;
    layers_[i].bias += other.layers_[i].bias;
  }
  return *this;
}

ParameterGradients& ParameterGradients::operator*=(double scale) {
  for (auto& l : layers_) {
    l.weight *= scale;
    l.bias *= scale;
  }
  return *this;
}

bool ParameterGradients::all_finite() const {
  for (const auto& l : layers_) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

bool ParameterGradients::is_zero() const {
  for (const auto& l : layers_) {
    if (!l.weight.isZero(0.0) || !l.bias.isZero(0.0)) return false;
  }
  return true;
}

EmbeddingNetwork::EmbeddingNetwork(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) fail(ErrorKind::Shape, "network needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.weight.rows() == 0 || l.weight.cols() == 0) {
      fail(ErrorKind::Shape, "layer " + std::to_string(i) + " has an empty weight matrix");
    }
    if (l.bias.size() != l.weight.rows()) {
      fail(ErrorKind::Shape, "layer " + std::to_string(i) + " bias length does not match weight rows");
    }
    if (i > 0 && layers_[i - 1].output_dim() != l.input_dim()) {
      fail(ErrorKind::Shape, "layer " + std::to_string(i) + " input does not chain with previous output");
    }
    if (!l.weight.allFinite() || !l.bias.allFinite()) {
      fail(ErrorKind::Numeric, "layer " + std::to_string(i) + " has non-finite parameters");
    }
  }
  if (layers_.back().activation != Activation::Identity) {
    fail(ErrorKind::Shape, "last layer must use identity activation");
  }
}

EmbeddingNetwork EmbeddingNetwork::glorot(std::size_t input_dim, std::span<const std::size_t> hidden,
                                          std::size_t output_dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> dims;
  dims.push_back(input_dim);
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(output_dim);

  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const auto fan_in = dims[i];
    const auto fan_out = dims[i + 1];
    if (fan_in == 0 || fan_out == 0) fail(ErrorKind::Config, "layer dimensions must be positive");
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer layer;
    layer.weight.resize(static_cast<Eigen::Index>(fan_out), static_cast<Eigen::Index>(fan_in));
    // Row-major fill so the draw order does not depend on Eigen's storage order.
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = dist(rng);
    }
    layer.bias = Vector::Zero(static_cast<Eigen::Index>(fan_out));
    layer.activation = (i + 2 == dims.size()) ? Activation::Identity : Activation::Rectifier;
    layers.push_back(std::move(layer));
  }
  return EmbeddingNetwork(std::move(layers));
}

std::size_t EmbeddingNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

void EmbeddingNetwork::check_input(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != input_dim()) {
    fail(ErrorKind::Shape, "input has length " + std::to_string(x.size()) + ", network expects " +
                               std::to_string(input_dim()));
  }
}

Vector EmbeddingNetwork::forward(const Vector& x) const {
  check_input(x);
  Vector h = x;
  for (const auto& l : layers_) {
    Vector z = l.weight * h + l.bias;
    if (l.activation == Activation::Rectifier) z = z.cwiseMax(0.0);
    h = std::move(z);
  }
  if (!h.allFinite()) fail(ErrorKind::Numeric, "forward pass produced a non-finite feature");
  return h;
}

ForwardCache EmbeddingNetwork::forward_with_cache(const Vector& x) const {
  check_input(x);
  ForwardCache cache;
  cache.inputs.reserve(layers_.size());
  cache.pre_activations.reserve(layers_.size());
  Vector h = x;
  for (const auto& l : layers_) {
    cache.inputs.push_back(h);
    Vector z = l.weight * h + l.bias;
    cache.pre_activations.push_back(z);
    if (l.activation == Activation::Rectifier) z = z.cwiseMax(0.0);
    h = std::move(z);
  }
  if (!h.allFinite()) fail(ErrorKind::Numeric, "forward pass produced a non-finite feature");
  cache.output = std::move(h);
  return cache;
}

ParameterGradients EmbeddingNetwork::backward(const ForwardCache& cache, const Vector& grad_out) const {
  if (cache.inputs.size() != layers_.size() || cache.pre_activations.size() != layers_.size()) {
    fail(ErrorKind::Shape, "stale cache: layer count does not match the network");
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (static_cast<std::size_t>(cache.inputs[i].size()) != layers_[i].input_dim() ||
        static_cast<std::size_t>(cache.pre_activations[i].size()) != layers_[i].output_dim()) {
      fail(ErrorKind::Shape, "stale cache: layer " + std::to_string(i) + " shapes do not match");
    }
  }
  if (static_cast<std::size_t>(grad_out.size()) != output_dim()) {
    fail(ErrorKind::Shape, "output gradient length does not match the embedding dimension");
  }

  std::vector<LayerGradient> grads(layers_.size());
  Vector delta = grad_out;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const auto& l = layers_[i];
    if (l.activation == Activation::Rectifier) {
      delta = (cache.pre_activations[i].array() > 0.0).select(delta, 0.0);
    }
    grads[i].weight = delta * cache.inputs[i].transpose();
    grads[i].bias = delta;
    if (i > 0) delta = l.weight.transpose() * delta;
  }
  return ParameterGradients(std::move(grads));
}

ParameterGradients EmbeddingNetwork::zero_gradients() const {
  std::vector<LayerGradient> grads;
  grads.reserve(layers_.size());
  for (const auto& l : layers_) {
    grads.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
  }
  return ParameterGradients(std::move(grads));
}

bool EmbeddingNetwork::same_architecture(const EmbeddingNetwork& other) const {
  if (other.layers_.size() != layers_.size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& a = layers_[i];
    const auto& b = other.layers_[i];
    if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols() ||
        a.activation != b.activation) {
      return false;
    }
  }
  return true;
}

void SgdConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    fail(ErrorKind::Config, "learning_rate must be positive");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) fail(ErrorKind::Config, "momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
    fail(ErrorKind::Config, "weight_decay must be non-negative");
  }
  if (!(gradient_clip >= 0.0) || !std::isfinite(gradient_clip)) {
    fail(ErrorKind::Config, "gradient_clip must be non-negative");
  }
}

SgdOptimizer::SgdOptimizer(SgdConfig config, const EmbeddingNetwork& net)
    : config_(config), velocity_(net.zero_gradients()) {
  config_.validate();
}

void SgdOptimizer::set_learning_rate(double lr) {
  if (!(lr > 0.0) || !std::isfinite(lr)) fail(ErrorKind::Config, "learning_rate must be positive");
  config_.learning_rate = lr;
}

void SgdOptimizer::step(EmbeddingNetwork& net, const ParameterGradients& grads) {
  auto& layers = net.mutable_layers();
  auto& vel = velocity_.layers();
  if (grads.layers().size() != layers.size() || vel.size() != layers.size()) {
    fail(ErrorKind::Shape, "gradient layout does not match the network");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (!shapes_match(grads.layers()[i], layers[i]) || !shapes_match(vel[i], layers[i])) {
      fail(ErrorKind::Shape, "gradient shape mismatch at layer " + std::to_string(i));
    }
  }

  double scale = 1.0;
  if (config_.gradient_clip > 0.0) {
    double sq = 0.0;
    for (const auto& g : grads.layers()) sq += g.weight.squaredNorm() + g.bias.squaredNorm();
    const double norm = std::sqrt(sq);
    if (norm > config_.gradient_clip) scale = config_.gradient_clip / norm;
  }

  // Compute into temporaries so a non-finite update leaves the network untouched.
  std::vector<LayerGradient> next_vel(layers.size());
  std::vector<DenseLayer> next = layers;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& g = grads.layers()[i];
    next_vel[i].weight = config_.momentum * vel[i].weight + scale * g.weight + config_.weight_decay * layers[i].weight;
    next_vel[i].bias = config_.momentum * vel[i].bias + scale * g.bias + config_.weight_decay * layers[i].bias;
    next[i].weight -= config_.learning_rate * next_vel[i].weight;
    next[i].bias -= config_.learning_rate * next_vel[i].bias;
    if (!next[i].weight.allFinite() || !next[i].bias.allFinite()) {
      fail(ErrorKind::Numeric, "SGD update produced non-finite parameters at layer " + std::to_string(i));
    }
  }
  layers = std::move(next);
  vel = std::move(next_vel);
}

}  // namespace owr
