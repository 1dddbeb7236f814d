// Reference (serial) vs OpenMP kernels on the MNIST-sized conv layer and the
// dense head that follows it. Run with OMP_NUM_THREADS to vary threads.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "dtl/kernels.hpp"

namespace k = dtl::kernels;

namespace {

std::vector<double> filled(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

k::ConvGeometry conv_geometry(const benchmark::State& state) {
  return {1, 28, 28, static_cast<std::size_t>(state.range(0)), 5};
}

template <bool Parallel>
void BM_ConvForward(benchmark::State& state) {
  const auto g = conv_geometry(state);
  const auto in = filled(g.input_size(), 1), w = filled(g.weight_size(), 2), b = filled(g.filters, 3);
  std::vector<double> out(g.output_size());
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::conv2d_forward(g, in, w, b, out);
    } else {
      k::reference::conv2d_forward(g, in, w, b, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_ConvBackward(benchmark::State& state) {
  const auto g = conv_geometry(state);
  const auto in = filled(g.input_size(), 1), w = filled(g.weight_size(), 2), delta = filled(g.output_size(), 4);
  std::vector<double> gw(g.weight_size()), gb(g.filters), gi(g.input_size());
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::conv2d_backward_weights(g, in, delta, gw, gb);
      k::conv2d_backward_input(g, w, delta, gi);
    } else {
      k::reference::conv2d_backward_weights(g, in, delta, gw, gb);
      k::reference::conv2d_backward_input(g, w, delta, gi);
    }
    benchmark::DoNotOptimize(gi.data());
  }
}

template <bool Parallel>
void BM_Dense(benchmark::State& state) {
  const k::DenseGeometry g{static_cast<std::size_t>(state.range(0)), 10};
  const auto in = filled(g.inputs, 1), w = filled(g.inputs * g.outputs, 2), b = filled(g.outputs, 3);
  const auto delta = filled(g.outputs, 4);
  std::vector<double> out(g.outputs), gw(g.inputs * g.outputs), gb(g.outputs), gi(g.inputs);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::dense_forward(g, in, w, b, out);
      k::dense_backward_weights(g, in, delta, gw, gb);
      k::dense_backward_input(g, w, delta, gi);
    } else {
      k::reference::dense_forward(g, in, w, b, out);
      k::reference::dense_backward_weights(g, in, delta, gw, gb);
      k::reference::dense_backward_input(g, w, delta, gi);
    }
    benchmark::DoNotOptimize(gi.data());
  }
}

}  // namespace

BENCHMARK(BM_ConvForward<false>)->Name("conv_forward/reference")->Arg(1)->Arg(20);
BENCHMARK(BM_ConvForward<true>)->Name("conv_forward/openmp")->Arg(1)->Arg(20);
BENCHMARK(BM_ConvBackward<false>)->Name("conv_backward/reference")->Arg(1)->Arg(20);
BENCHMARK(BM_ConvBackward<true>)->Name("conv_backward/openmp")->Arg(1)->Arg(20);
// 20 filters x 12 x 12 pooled features feed the head.
BENCHMARK(BM_Dense<false>)->Name("dense/reference")->Arg(2880);
BENCHMARK(BM_Dense<true>)->Name("dense/openmp")->Arg(2880);

BENCHMARK_MAIN();
