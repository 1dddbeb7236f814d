#include <algorithm>
#include <cstdint>

#include "dtl/kernels.hpp"

namespace dtl::kernels {

namespace {
// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = std::size_t{1} << 15;
}  // namespace

void conv2d_forward(const ConvGeometry& g, std::span<const double> input, std::span<const double> weights,
                    std::span<const double> bias, std::span<double> output) {
  const std::int64_t oh = static_cast<std::int64_t>(g.out_height());
  const std::int64_t filters = static_cast<std::int64_t>(g.filters);
  const std::size_t ow = g.out_width(), k = g.kernel, ch = g.in_channels, ih = g.in_height, iw = g.in_width;
  const double* in = input.data();
  const double* w = weights.data();
  double* out = output.data();
  const bool parallel = g.output_size() * ch * k * k >= kParallelWork;
#pragma omp parallel for collapse(2) if (parallel)
  for (std::int64_t f = 0; f < filters; ++f) {
    for (std::int64_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        double acc = bias[f];
        for (std::size_t c = 0; c < ch; ++c) {
          const double* wk = w + (f * ch + c) * k * k;
          const double* ip = in + (c * ih + y) * iw + x;
          for (std::size_t ky = 0; ky < k; ++ky) {
            for (std::size_t kx = 0; kx < k; ++kx) acc += wk[ky * k + kx] * ip[ky * iw + kx];
          }
        }
        out[(f * oh + y) * ow + x] = acc;
      }
    }
  }
}

void conv2d_backward_weights(const ConvGeometry& g, std::span<const double> input, std::span<const double> delta,
                             std::span<double> grad_weights, std::span<double> grad_bias) {
  const std::size_t oh = g.out_height(), ow = g.out_width(), k = g.kernel, ch = g.in_channels;
  const std::size_t ih = g.in_height, iw = g.in_width;
  const std::int64_t filters = static_cast<std::int64_t>(g.filters);
  const double* in = input.data();
  const double* d = delta.data();
  const bool parallel = g.output_size() * ch * k * k >= kParallelWork;
#pragma omp parallel for if (parallel)
  for (std::int64_t f = 0; f < filters; ++f) {
    const double* df = d + f * oh * ow;
    double db = 0.0;
    for (std::size_t i = 0; i < oh * ow; ++i) db += df[i];
    grad_bias[f] += db;
    for (std::size_t c = 0; c < ch; ++c) {
      for (std::size_t ky = 0; ky < k; ++ky) {
        for (std::size_t kx = 0; kx < k; ++kx) {
          double acc = 0.0;
          for (std::size_t y = 0; y < oh; ++y) {
            const double* ip = in + (c * ih + y + ky) * iw + kx;
            const double* dp = df + y * ow;
            for (std::size_t x = 0; x < ow; ++x) acc += dp[x] * ip[x];
          }
          grad_weights[((f * ch + c) * k + ky) * k + kx] += acc;
        }
      }
    }
  }
}

void conv2d_backward_input(const ConvGeometry& g, std::span<const double> weights, std::span<const double> delta,
                           std::span<double> grad_input) {
  const std::size_t oh = g.out_height(), ow = g.out_width(), k = g.kernel, ch = g.in_channels;
  const std::int64_t ih = static_cast<std::int64_t>(g.in_height);
  const std::int64_t channels = static_cast<std::int64_t>(ch);
  const std::size_t iw = g.in_width;
  const double* w = weights.data();
  const double* d = delta.data();
  const bool parallel = g.output_size() * ch * k * k >= kParallelWork;
#pragma omp parallel for collapse(2) if (parallel)
  for (std::int64_t c = 0; c < channels; ++c) {
    for (std::int64_t iy = 0; iy < ih; ++iy) {
      for (std::size_t ix = 0; ix < iw; ++ix) {
        double acc = 0.0;
        for (std::size_t f = 0; f < g.filters; ++f) {
          for (std::size_t ky = 0; ky < k; ++ky) {
            if (static_cast<std::size_t>(iy) < ky || static_cast<std::size_t>(iy) - ky >= oh) continue;
            for (std::size_t kx = 0; kx < k; ++kx) {
              if (ix < kx || ix - kx >= ow) continue;
              acc += w[((f * ch + c) * k + ky) * k + kx] * d[(f * oh + iy - ky) * ow + ix - kx];
            }
          }
        }
        grad_input[(c * ih + iy) * iw + ix] = acc;
      }
    }
  }
}

void dense_forward(const DenseGeometry& g, std::span<const double> input, std::span<const double> weights,
                   std::span<const double> bias, std::span<double> output) {
  const std::int64_t outputs = static_cast<std::int64_t>(g.outputs);
  const std::size_t n = g.inputs;
  const bool parallel = g.outputs * g.inputs >= kParallelWork;
#pragma omp parallel for if (parallel)
  for (std::int64_t o = 0; o < outputs; ++o) {
    const double* row = weights.data() + o * n;
    double acc = bias[o];
    for (std::size_t i = 0; i < n; ++i) acc += row[i] * input[i];
    output[o] = acc;
  }
}

void dense_backward_weights(const DenseGeometry& g, std::span<const double> input, std::span<const double> delta,
                            std::span<double> grad_weights, std::span<double> grad_bias) {
  const std::int64_t outputs = static_cast<std::int64_t>(g.outputs);
  const std::size_t n = g.inputs;
  const bool parallel = g.outputs * g.inputs >= kParallelWork;
#pragma omp parallel for if (parallel)
  for (std::int64_t o = 0; o < outputs; ++o) {
    const double d = delta[o];
    grad_bias[o] += d;
    double* row = grad_weights.data() + o * n;
    for (std::size_t i = 0; i < n; ++i) row[i] += d * input[i];
  }
}

void dense_backward_input(const DenseGeometry& g, std::span<const double> weights, std::span<const double> delta,
                          std::span<double> grad_input) {
  const std::int64_t inputs = static_cast<std::int64_t>(g.inputs);
  const std::size_t n = g.inputs;
  const bool parallel = g.outputs * g.inputs >= kParallelWork;
#pragma omp parallel for if (parallel)
  for (std::int64_t i = 0; i < inputs; ++i) {
    double acc = 0.0;
    for (std::size_t o = 0; o < g.outputs; ++o) acc += weights[o * n + i] * delta[o];
    grad_input[i] = acc;
  }
}

void maxpool_forward(const PoolGeometry& g, std::span<const double> input, std::span<double> output,
                     std::span<std::uint32_t> argmax) {
  const std::size_t oh = g.out_height(), ow = g.out_width(), win = g.window;
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        std::size_t best = (c * g.in_height + y * win) * g.in_width + x * win;
        for (std::size_t dy = 0; dy < win; ++dy) {
          for (std::size_t dx = 0; dx < win; ++dx) {
            const std::size_t idx = (c * g.in_height + y * win + dy) * g.in_width + x * win + dx;
            if (input[idx] > input[best]) best = idx;
          }
        }
        const std::size_t o = (c * oh + y) * ow + x;
        output[o] = input[best];
        argmax[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
}

void maxpool_backward(const PoolGeometry& g, std::span<const std::uint32_t> argmax, std::span<const double> delta,
                      std::span<double> grad_input) {
  std::fill(grad_input.begin(), grad_input.end(), 0.0);
  for (std::size_t o = 0; o < g.output_size(); ++o) grad_input[argmax[o]] += delta[o];
}

}  // namespace dtl::kernels
