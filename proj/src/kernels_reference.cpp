#include <algorithm>

#include "dtl/kernels.hpp"

namespace dtl::kernels::reference {

void conv2d_forward(const ConvGeometry& g, std::span<const double> input, std::span<const double> weights,
                    std::span<const double> bias, std::span<double> output) {
  const std::size_t oh = g.out_height(), ow = g.out_width(), k = g.kernel;
  for (std::size_t f = 0; f < g.filters; ++f) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        double acc = bias[f];
        for (std::size_t c = 0; c < g.in_channels; ++c) {
          for (std::size_t ky = 0; ky < k; ++ky) {
            for (std::size_t kx = 0; kx < k; ++kx) {
              acc += weights[((f * g.in_channels + c) * k + ky) * k + kx] *
                     input[(c * g.in_height + y + ky) * g.in_width + x + kx];
            }
          }
        }
        output[(f * oh + y) * ow + x] = acc;
      }
    }
  }
}

void conv2d_backward_weights(const ConvGeometry& g, std::span<const double> input, std::span<const double> delta,
                             std::span<double> grad_weights, std::span<double> grad_bias) {
  const std::size_t oh = g.out_height(), ow = g.out_width(), k = g.kernel;
  for (std::size_t f = 0; f < g.filters; ++f) {
    double db = 0.0;
    for (std::size_t i = 0; i < oh * ow; ++i) db += delta[f * oh * ow + i];
    grad_bias[f] += db;
    for (std::size_t c = 0; c < g.in_channels; ++c) {
      for (std::size_t ky = 0; ky < k; ++ky) {
        for (std::size_t kx = 0; kx < k; ++kx) {
          double acc = 0.0;
          for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
              acc += delta[(f * oh + y) * ow + x] * input[(c * g.in_height + y + ky) * g.in_width + x + kx];
            }
          }
          grad_weights[((f * g.in_channels + c) * k + ky) * k + kx] += acc;
        }
      }
    }
  }
}

void conv2d_backward_input(const ConvGeometry& g, std::span<const double> weights, std::span<const double> delta,
                           std::span<double> grad_input) {
  const std::size_t oh = g.out_height(), ow = g.out_width(), k = g.kernel;
  for (std::size_t c = 0; c < g.in_channels; ++c) {
    for (std::size_t iy = 0; iy < g.in_height; ++iy) {
      for (std::size_t ix = 0; ix < g.in_width; ++ix) {
        double acc = 0.0;
        for (std::size_t f = 0; f < g.filters; ++f) {
          for (std::size_t ky = 0; ky < k; ++ky) {
            if (iy < ky || iy - ky >= oh) continue;
            for (std::size_t kx = 0; kx < k; ++kx) {
              if (ix < kx || ix - kx >= ow) continue;
              acc += weights[((f * g.in_channels + c) * k + ky) * k + kx] * delta[(f * oh + iy - ky) * ow + ix - kx];
            }
          }
        }
        grad_input[(c * g.in_height + iy) * g.in_width + ix] = acc;
      }
    }
  }
}

void dense_forward(const DenseGeometry& g, std::span<const double> input, std::span<const double> weights,
                   std::span<const double> bias, std::span<double> output) {
  for (std::size_t o = 0; o < g.outputs; ++o) {
    double acc = bias[o];
    for (std::size_t i = 0; i < g.inputs; ++i) acc += weights[o * g.inputs + i] * input[i];
    output[o] = acc;
  }
}

void dense_backward_weights(const DenseGeometry& g, std::span<const double> input, std::span<const double> delta,
                            std::span<double> grad_weights, std::span<double> grad_bias) {
  for (std::size_t o = 0; o < g.outputs; ++o) {
    grad_bias[o] += delta[o];
    for (std::size_t i = 0; i < g.inputs; ++i) grad_weights[o * g.inputs + i] += delta[o] * input[i];
  }
}

void dense_backward_input(const DenseGeometry& g, std::span<const double> weights, std::span<const double> delta,
                          std::span<double> grad_input) {
  for (std::size_t i = 0; i < g.inputs; ++i) {
    double acc = 0.0;
    for (std::size_t o = 0; o < g.outputs; ++o) acc += weights[o * g.inputs + i] * delta[o];
    grad_input[i] = acc;
  }
}

}  // namespace dtl::kernels::reference
