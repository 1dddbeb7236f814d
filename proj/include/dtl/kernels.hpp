#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

// Convolution and dense kernels. `dtl::kernels::reference` holds the plain
// serial loops; the functions directly in `dtl::kernels` are the
// OpenMP-parallel versions used by the engine. Every output element is
// produced by one iteration summing in the same order as the reference, so
// results are bitwise identical regardless of thread count.

namespace dtl::kernels {

/// Geometry of a valid-padding, stride-1 convolution.
struct ConvGeometry {
  std::size_t in_channels;
  std::size_t in_height;
  std::size_t in_width;
  std::size_t filters;
  std::size_t kernel;

  std::size_t out_height() const { return in_height - kernel + 1; }
  std::size_t out_width() const { return in_width - kernel + 1; }
  std::size_t input_size() const { return in_channels * in_height * in_width; }
  std::size_t output_size() const { return filters * out_height() * out_width(); }
  std::size_t weight_size() const { return filters * in_channels * kernel * kernel; }
};

struct DenseGeometry {
  std::size_t inputs;
  std::size_t outputs;
};

struct PoolGeometry {
  std::size_t channels;
  std::size_t in_height;
  std::size_t in_width;
  std::size_t window;

  std::size_t out_height() const { return in_height / window; }
  std::size_t out_width() const { return in_width / window; }
  std::size_t output_size() const { return channels * out_height() * out_width(); }
};

#define DTL_KERNEL_DECLARATIONS                                                                         \
  void conv2d_forward(const ConvGeometry& g, std::span<const double> input, std::span<const double> weights, \
                      std::span<const double> bias, std::span<double> output);                          \
  void conv2d_backward_weights(const ConvGeometry& g, std::span<const double> input,                    \
                               std::span<const double> delta, std::span<double> grad_weights,           \
                               std::span<double> grad_bias);                                            \
  void conv2d_backward_input(const ConvGeometry& g, std::span<const double> weights,                    \
                             std::span<const double> delta, std::span<double> grad_input);              \
  void dense_forward(const DenseGeometry& g, std::span<const double> input, std::span<const double> weights, \
                     std::span<const double> bias, std::span<double> output);                           \
  void dense_backward_weights(const DenseGeometry& g, std::span<const double> input,                    \
                              std::span<const double> delta, std::span<double> grad_weights,            \
                              std::span<double> grad_bias);                                             \
  void dense_backward_input(const DenseGeometry& g, std::span<const double> weights,                    \
                            std::span<const double> delta, std::span<double> grad_input);

// conv2d_forward:          output = bias + weights * input (cross-correlation)
// conv2d_backward_weights: grad_weights += delta (*) input, grad_bias += sum(delta)
// conv2d_backward_input:   grad_input = full correlation of delta with flipped weights
// dense_*:                 the same three for y = W x + b, W stored outputs x inputs
DTL_KERNEL_DECLARATIONS

namespace reference {
DTL_KERNEL_DECLARATIONS
}  // namespace reference

#undef DTL_KERNEL_DECLARATIONS

/// 2x2-style max pooling (window x window, stride = window). `argmax`
/// receives the flat input index selected for each output; ties pick the
/// first element in row-major window order.
void maxpool_forward(const PoolGeometry& g, std::span<const double> input, std::span<double> output,
                     std::span<std::uint32_t> argmax);
void maxpool_backward(const PoolGeometry& g, std::span<const std::uint32_t> argmax, std::span<const double> delta,
                      std::span<double> grad_input);

}  // namespace dtl::kernels
