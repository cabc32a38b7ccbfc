#pragma once

#include "owr/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace owr {

enum class Activation { Rectifier, Identity };

struct DenseLayer {
  Matrix weight;  ///< output_dim x input_dim
  Vector bias;    ///< output_dim
  Activation activation = Activation::Identity;

  std::size_t input_dim() const { return static_cast<std::size_t>(weight.cols()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(weight.rows()); }
};

struct LayerGradient {
  Matrix weight;
  Vector bias;
};

/// Gradients (or any per-parameter quantity, e.g. SGD velocity) laid out like the network.
class ParameterGradients {
 public:
  ParameterGradients() = default;
  explicit ParameterGradients(std::vector<LayerGradient> layers) : layers_(std::move(layers)) {}

  std::vector<LayerGradient>& layers() { return layers_; }
  const std::vector<LayerGradient>& layers() const { return layers_; }

  ParameterGradients& operator+=(const ParameterGradients& other);
  ParameterGradients& operator*=(double scale);

  bool all_finite() const;
  bool is_zero() const;

 private:
  std::vector<LayerGradient> layers_;
};

/// Per-layer inputs and pre-activations recorded by a forward pass.
struct ForwardCache {
  std::vector<Vector> inputs;
  std::vector<Vector> pre_activations;
  Vector output;
};

/// Multilayer perceptron φ_Θ mapping raw inputs to the embedding space.
class EmbeddingNetwork {
 public:
  /// Validates that layer dimensions chain, parameters are finite and the
  /// last layer has identity activation.
  explicit EmbeddingNetwork(std::vector<DenseLayer> layers);

  /// Builds input_dim -> hidden... -> output_dim with rectifier hidden layers,
  /// Glorot-uniform weights (±sqrt(6/(fan_in+fan_out))) and zero biases.
  static EmbeddingNetwork glorot(std::size_t input_dim, std::span<const std::size_t> hidden,
                                 std::size_t output_dim, std::uint64_t seed);

  std::size_t input_dim() const { return layers_.front().input_dim(); }
  std::size_t output_dim() const { return layers_.back().output_dim(); }
  std::size_t layer_count() const { return layers_.size(); }
  std::size_t parameter_count() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  /// Raw parameter access for optimizers and gradient checks. Callers must keep shapes intact.
  std::vector<DenseLayer>& mutable_layers() { return layers_; }

  Vector forward(const Vector& x) const;
  ForwardCache forward_with_cache(const Vector& x) const;
  ParameterGradients backward(const ForwardCache& cache, const Vector& grad_out) const;

  ParameterGradients zero_gradients() const;
  bool same_architecture(const EmbeddingNetwork& other) const;

 private:
  void check_input(const Vector& x) const;

  std::vector<DenseLayer> layers_;
};

/// Frozen copy of a network, used as the distillation teacher.
class NetworkSnapshot {
 public:
  explicit NetworkSnapshot(const EmbeddingNetwork& net) : net_(net) {}

  Vector forward(const Vector& x) const { return net_.forward(x); }
  const EmbeddingNetwork& network() const { return net_; }

 private:
  EmbeddingNetwork net_;
};

inline NetworkSnapshot snapshot(const EmbeddingNetwork& net) { return NetworkSnapshot(net); }

struct SgdConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-5;
  double gradient_clip = 0.0;  ///< max global gradient norm; 0 disables

  void validate() const;
};

/// SGD with momentum and L2 weight decay:
///   v <- momentum * v + (grad + weight_decay * param)
///   param <- param - learning_rate * v
/// With gradient_clip > 0, grad is first rescaled to norm <= gradient_clip.
class SgdOptimizer {
 public:
  SgdOptimizer(SgdConfig config, const EmbeddingNetwork& net);

  void step(EmbeddingNetwork& net, const ParameterGradients& grads);

  const SgdConfig& config() const { return config_; }
  void set_learning_rate(double lr);
  ParameterGradients& velocity() { return velocity_; }
  const ParameterGradients& velocity() const { return velocity_; }

 private:
  SgdConfig config_;
  ParameterGradients velocity_;
};

}  // namespace owr
