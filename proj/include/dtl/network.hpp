#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dtl/kernels.hpp"
#include "dtl/tensor.hpp"

namespace dtl {

enum class LayerKind { conv2d, relu, maxpool, flatten, dense, softmax };

std::string to_string(LayerKind kind);

struct LayerParams {
  Tensor weights;
  Tensor biases;

  std::size_t count() const { return weights.size() + biases.size(); }
  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

/// One layer of a feed-forward network. `size` is the filter count (conv2d),
/// unit count (dense), window (maxpool) or class count (softmax).
struct Layer {
  LayerKind kind;
  Shape in_shape;
  Shape out_shape;
  std::size_t size = 0;
  std::size_t kernel = 0;
  LayerParams params;
  bool frozen = false;

  bool has_params() const { return kind == LayerKind::conv2d || kind == LayerKind::dense; }
  kernels::ConvGeometry conv_geometry() const;
  kernels::DenseGeometry dense_geometry() const;
  kernels::PoolGeometry pool_geometry() const;

  friend bool operator==(const Layer&, const Layer&) = default;
};

/// Ordered layer stack over a channels x height x width input. Layers are
/// appended with the builder methods, which validate that shapes chain; the
/// stack is complete once `softmax` is appended.
class Network {
 public:
  Network() = default;
  explicit Network(Shape input_shape);

  Network& conv2d(std::size_t filters, std::size_t kernel);
  Network& relu();
  Network& maxpool(std::size_t window);
  Network& flatten();
  Network& dense(std::size_t units);
  Network& softmax();

  const Shape& input_shape() const { return input_shape_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }
  const Layer& layer(std::size_t i) const { return layers_.at(i); }
  Layer& layer(std::size_t i) { return layers_.at(i); }
  std::size_t depth() const { return layers_.size(); }

  bool complete() const { return !layers_.empty() && layers_.back().kind == LayerKind::softmax; }
  std::size_t class_count() const;
  std::size_t parameter_count() const;

  /// Index of the first conv2d layer, or depth() if there is none.
  std::size_t first_conv() const;
  /// Index of the last dense layer, or depth() if there is none.
  std::size_t last_dense() const;

  /// Draws weights of layer i uniformly in [-s, s], s = sqrt(6 / (fan_in +
  /// fan_out)); biases are zeroed.
  void initialize_layer(std::size_t i, std::uint64_t seed);
  void initialize(std::uint64_t seed);

  /// Marks layers [0, depth) frozen and the rest trainable.
  void freeze_below(std::size_t depth);

  /// Compact descriptor, e.g. "in=1x28x28;conv2d:20x5;relu;maxpool:2;flatten;dense:10;softmax".
  std::string descriptor() const;
  static Network from_descriptor(const std::string& descriptor);

  friend bool operator==(const Network&, const Network&) = default;

 private:
  const Shape& tail_shape() const;
  Layer& push(Layer layer);

  Shape input_shape_;
  std::vector<Layer> layers_;
};

/// Activations recorded by forward: activations[0] is the input and
/// activations[l + 1] the output of layer l, for every layer before the
/// softmax. Max-pool layers also record their selected input indices.
struct ActivationTrace {
  std::vector<Tensor> activations;
  std::vector<std::vector<std::uint32_t>> pool_argmax;
};

struct ForwardResult {
  Tensor logits;
  ActivationTrace trace;
};

/// Per-layer parameter gradients; empty entries for parameterless layers.
struct Gradients {
  std::vector<LayerParams> layers;

  static Gradients zeros_like(const Network& net);
  void add(const Gradients& other);
  void scale(double factor);
};

struct OutputError {
  double loss;
  Tensor delta;
};

ForwardResult forward(const Network& net, const Tensor& input);

/// Class scores only; no trace is kept.
Tensor predict_logits(const Network& net, const Tensor& input);

/// Softmax cross-entropy against `label`; delta = softmax(logits) - one_hot(label).
OutputError output_error(const Tensor& logits, std::size_t label);

Tensor softmax_probabilities(const Tensor& logits);

/// Accumulates analytic gradients into `grads` given the loss gradient with
/// respect to the logits. Frozen layers receive no weight gradient.
void backward(const Network& net, const ActivationTrace& trace, const Tensor& delta_out, Gradients& grads);
Gradients backward(const Network& net, const ActivationTrace& trace, const Tensor& delta_out);

/// w <- w - (eta * gamma) * grad_w, b likewise, for every trainable layer.
void sgd_step(Network& net, const Gradients& grads, double eta, double gamma);

}  // namespace dtl
