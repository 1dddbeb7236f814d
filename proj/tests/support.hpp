#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dtl/dataset.hpp"
#include "dtl/network.hpp"
#include "dtl/rng.hpp"

namespace dtl::testing {

// Straight-line evidence pipeline written without the library: counts is a
// row-major C x C confusion matrix. Returns theta followed by gamma, or an
// all-zero result when either diagonal sum vanishes.
struct OracleBpa {
  std::vector<double> theta;
  double gamma = 0.0;
};

inline OracleBpa oracle_bpa(const std::vector<std::uint64_t>& counts, std::size_t c, bool textbook = false) {
  std::vector<double> r(c * c, 0.0), s(c * c, 0.0);
  for (std::size_t j = 0; j < c; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < c; ++i) col += static_cast<double>(counts[i * c + j]);
    for (std::size_t i = 0; i < c; ++i) r[i * c + j] = col > 0.0 ? counts[i * c + j] / col : 0.0;
  }
  for (std::size_t i = 0; i < c; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < c; ++j) row += static_cast<double>(counts[i * c + j]);
    for (std::size_t j = 0; j < c; ++j) s[i * c + j] = row > 0.0 ? counts[i * c + j] / row : 0.0;
  }
  double rd = 0.0, sd = 0.0;
  for (std::size_t i = 0; i < c; ++i) {
    rd += r[i * c + i];
    sd += s[i * c + i];
  }
  OracleBpa out{std::vector<double>(c, 0.0), 0.0};
  if (rd == 0.0 || sd == 0.0) return out;
  double agree = 0.0;
  for (std::size_t i = 0; i < c; ++i) agree += (r[i * c + i] / rd) * (s[i * c + i] / sd);
  double denom = textbook ? agree : 1.0 - agree;
  if (denom < 1e-12) denom = 1e-12;
  double sq = 0.0;
  for (std::size_t i = 0; i < c; ++i) {
    out.theta[i] = (r[i * c + i] / rd) * (s[i * c + i] / sd) / denom;
    sq += out.theta[i] * out.theta[i];
  }
  out.gamma = std::sqrt(sq);
  return out;
}

inline std::vector<std::uint64_t> random_counts(Rng& rng, std::size_t c, std::uint64_t max_entry = 20) {
  std::vector<std::uint64_t> counts(c * c);
  for (auto& n : counts) n = rng.below(max_entry + 1);
  return counts;
}

inline bool diagonals_nonzero(const std::vector<std::uint64_t>& counts, std::size_t c) {
  for (std::size_t i = 0; i < c; ++i)
    if (counts[i * c + i] > 0) return true;
  return false;
}

inline Tensor random_tensor(const Shape& shape, Rng& rng, double lo = 0.0, double hi = 1.0) {
  Tensor t(shape);
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

// Small network with mixed conv / pool / dense layers and at most
// `max_params` parameters.
inline Network random_network(Rng& rng, std::size_t max_params = 500) {
  for (;;) {
    const std::size_t channels = 1 + rng.below(2);
    const std::size_t side = 5 + rng.below(4);
    const std::size_t filters = 1 + rng.below(3);
    const std::size_t kernel = 2 + rng.below(2);
    const std::size_t classes = 2 + rng.below(3);
    Network net({channels, side, side});
    net.conv2d(filters, kernel).relu();
    const std::size_t conv_side = side - kernel + 1;
    if (conv_side >= 4 && rng.below(3) != 0) net.maxpool(2);
    net.flatten();
    if (rng.below(2) == 0) net.dense(2 + rng.below(5)).relu();
    net.dense(classes).softmax();
    if (net.parameter_count() > max_params) continue;
    net.initialize(rng.next());
    // Non-zero biases so bias gradients are exercised away from symmetry.
    for (auto& layer : net.layers())
      for (double& b : layer.params.biases.values()) b = rng.uniform(-0.1, 0.1);
    return net;
  }
}

inline double sample_loss(const Network& net, const Tensor& input, std::size_t label) {
  return output_error(predict_logits(net, input), label).loss;
}

struct GradientCheck {
  std::size_t checked = 0;
  std::size_t failures = 0;
  double worst_excess = 0.0;
};

// Central differences over every weight and bias.
inline GradientCheck check_gradients(const Network& net, const Tensor& input, std::size_t label, double step = 1e-5,
                                     double rel_tol = 1e-4, double abs_tol = 1e-7) {
  const auto fwd = forward(net, input);
  const auto err = output_error(fwd.logits, label);
  const Gradients grads = backward(net, fwd.trace, err.delta);
  GradientCheck result;
  Network probe = net;
  for (std::size_t l = 0; l < net.depth(); ++l) {
    if (!net.layer(l).has_params()) continue;
    for (int which = 0; which < 2; ++which) {
      Tensor& param = which == 0 ? probe.layer(l).params.weights : probe.layer(l).params.biases;
      const Tensor& analytic = which == 0 ? grads.layers[l].weights : grads.layers[l].biases;
      for (std::size_t i = 0; i < param.size(); ++i) {
        const double saved = param[i];
        param[i] = saved + step;
        const double up = sample_loss(probe, input, label);
        param[i] = saved - step;
        const double down = sample_loss(probe, input, label);
        param[i] = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double diff = std::abs(numeric - analytic[i]);
        const double allowed = std::max(abs_tol, rel_tol * std::max(std::abs(numeric), std::abs(analytic[i])));
        ++result.checked;
        if (diff > allowed) {
          ++result.failures;
          result.worst_excess = std::max(result.worst_excess, diff / allowed);
        }
      }
    }
  }
  return result;
}

// Two well separated Gaussian blobs drawn as images: class 0 bright on the
// left half, class 1 on the right.
inline LabelledDataset blob_dataset(std::size_t per_class, std::uint64_t seed, std::size_t side = 6) {
  Rng rng(seed);
  const std::size_t n = 2 * per_class;
  Tensor images({n, 1, side, side});
  std::vector<std::size_t> labels(n);
  for (std::size_t k = 0; k < n; ++k) {
    labels[k] = k % 2;
    for (std::size_t y = 0; y < side; ++y)
      for (std::size_t x = 0; x < side; ++x) {
        const bool lit = (labels[k] == 0) == (x < side / 2);
        const double v = (lit ? 0.8 : 0.2) + 0.1 * rng.normal();
        images[(k * side + y) * side + x] = std::clamp(v, 0.0, 1.0);
      }
  }
  return LabelledDataset(std::move(images), std::move(labels), 2);
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace dtl::testing
