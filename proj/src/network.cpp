#include "dtl/network.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dtl/error.hpp"
#include "dtl/rng.hpp"

namespace dtl {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::flatten: return "flatten";
    case LayerKind::dense: return "dense";
    case LayerKind::softmax: return "softmax";
  }
  return "unknown";
}

kernels::ConvGeometry Layer::conv_geometry() const {
  return {in_shape[0], in_shape[1], in_shape[2], size, kernel};
}

kernels::DenseGeometry Layer::dense_geometry() const { return {shape_volume(in_shape), size}; }

kernels::PoolGeometry Layer::pool_geometry() const { return {in_shape[0], in_shape[1], in_shape[2], size}; }

namespace {

Layer make_layer(LayerKind kind, Shape in, Shape out, std::size_t size = 0, std::size_t kernel = 0) {
  Layer l;
  l.kind = kind;
  l.in_shape = std::move(in);
  l.out_shape = std::move(out);
  l.size = size;
  l.kernel = kernel;
  return l;
}

}  // namespace

Network::Network(Shape input_shape) : input_shape_(std::move(input_shape)) {
  if (input_shape_.size() != 3 || shape_volume(input_shape_) == 0) {
    throw ShapeError("network input must be channels x height x width, got " + shape_string(input_shape_));
  }
}

const Shape& Network::tail_shape() const { return layers_.empty() ? input_shape_ : layers_.back().out_shape; }

Layer& Network::push(Layer layer) {
  if (complete()) throw ShapeError("cannot append " + to_string(layer.kind) + " after softmax");
  layers_.push_back(std::move(layer));
  return layers_.back();
}

Network& Network::conv2d(std::size_t filters, std::size_t kernel) {
  const Shape in = tail_shape();
  if (in.size() != 3) throw ShapeError("conv2d needs a 3-d input, got " + shape_string(in));
  if (filters == 0 || kernel == 0 || kernel > in[1] || kernel > in[2]) {
    throw ShapeError("conv2d " + std::to_string(filters) + "x" + std::to_string(kernel) + " does not fit input " +
                     shape_string(in));
  }
  Layer l = make_layer(LayerKind::conv2d, in, {filters, in[1] - kernel + 1, in[2] - kernel + 1}, filters, kernel);
  l.params.weights = Tensor({filters, in[0], kernel, kernel});
  l.params.biases = Tensor({filters});
  push(std::move(l));
  return *this;
}

Network& Network::relu() {
  const Shape in = tail_shape();
  push(make_layer(LayerKind::relu, in, in));
  return *this;
}

Network& Network::maxpool(std::size_t window) {
  const Shape in = tail_shape();
  if (in.size() != 3 || window == 0 || in[1] < window || in[2] < window) {
    throw ShapeError("maxpool " + std::to_string(window) + " does not fit input " + shape_string(in));
  }
  push(make_layer(LayerKind::maxpool, in, {in[0], in[1] / window, in[2] / window}, window));
  return *this;
}

Network& Network::flatten() {
  const Shape in = tail_shape();
  push(make_layer(LayerKind::flatten, in, {shape_volume(in)}));
  return *this;
}

Network& Network::dense(std::size_t units) {
  const Shape in = tail_shape();
  if (in.size() != 1) throw ShapeError("dense needs a flat input, got " + shape_string(in));
  if (units == 0) throw ShapeError("dense layer needs at least one unit");
  Layer l = make_layer(LayerKind::dense, in, {units}, units);
  l.params.weights = Tensor({units, in[0]});
  l.params.biases = Tensor({units});
  push(std::move(l));
  return *this;
}

Network& Network::softmax() {
  const Shape in = tail_shape();
  if (in.size() != 1 || in[0] < 2) throw ShapeError("softmax needs a flat input of >= 2 classes, got " + shape_string(in));
  push(make_layer(LayerKind::softmax, in, in, in[0]));
  return *this;
}

std::size_t Network::class_count() const {
  if (!complete()) throw ShapeError("network does not end in softmax");
  return layers_.back().size;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.params.count();
  return n;
}

std::size_t Network::first_conv() const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].kind == LayerKind::conv2d) return i;
  }
  return layers_.size();
}

std::size_t Network::last_dense() const {
  for (std::size_t i = layers_.size(); i-- > 0;) {
    if (layers_[i].kind == LayerKind::dense) return i;
  }
  return layers_.size();
}

void Network::initialize_layer(std::size_t i, std::uint64_t seed) {
  Layer& l = layers_.at(i);
  if (!l.has_params()) return;
  std::size_t fan_in = 0, fan_out = 0;
  if (l.kind == LayerKind::conv2d) {
    fan_in = l.in_shape[0] * l.kernel * l.kernel;
    fan_out = l.size * l.kernel * l.kernel;
  } else {
    fan_in = l.in_shape[0];
    fan_out = l.size;
  }
  const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Rng rng(seed);
  for (double& w : l.params.weights.values()) w = rng.uniform(-s, s);
  l.params.biases.fill(0.0);
}

void Network::initialize(std::uint64_t seed) {
  for (std::size_t i = 0; i < layers_.size(); ++i) initialize_layer(i, derive_seed(seed, i));
}

void Network::freeze_below(std::size_t depth) {
  for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i].frozen = i < depth;
}

std::string Network::descriptor() const {
  std::ostringstream out;
  out << "in=" << shape_string(input_shape_);
  for (const auto& l : layers_) {
    out << ';' << to_string(l.kind);
    switch (l.kind) {
      case LayerKind::conv2d: out << ':' << l.size << 'x' << l.kernel; break;
      case LayerKind::maxpool:
      case LayerKind::dense: out << ':' << l.size; break;
      default: break;
    }
  }
  return out.str();
}

namespace {

std::vector<std::string> split_on(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  return parts;
}

std::size_t parse_size(const std::string& text, const std::string& context) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != text.size()) throw ShapeError("bad number '" + text + "' in descriptor " + context);
  return static_cast<std::size_t>(v);
}

}  // namespace

Network Network::from_descriptor(const std::string& descriptor) {
  const auto parts = split_on(descriptor, ';');
  if (parts.empty() || parts[0].rfind("in=", 0) != 0) throw ShapeError("descriptor must start with in=: " + descriptor);
  Shape in;
  for (const auto& d : split_on(parts[0].substr(3), 'x')) in.push_back(parse_size(d, descriptor));
  Network net(in);
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto colon = parts[i].find(':');
    const std::string kind = parts[i].substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : parts[i].substr(colon + 1);
    if (kind == "conv2d") {
      const auto dims = split_on(arg, 'x');
      if (dims.size() != 2) throw ShapeError("conv2d needs filters x kernel in " + descriptor);
      net.conv2d(parse_size(dims[0], descriptor), parse_size(dims[1], descriptor));
    } else if (kind == "relu") {
      net.relu();
    } else if (kind == "maxpool") {
      net.maxpool(parse_size(arg, descriptor));
    } else if (kind == "flatten") {
      net.flatten();
    } else if (kind == "dense") {
      net.dense(parse_size(arg, descriptor));
    } else if (kind == "softmax") {
      net.softmax();
    } else {
      throw ShapeError("unknown layer '" + kind + "' in descriptor " + descriptor);
    }
  }
  return net;
}

Gradients Gradients::zeros_like(const Network& net) {
  Gradients g;
  g.layers.reserve(net.depth());
  for (const auto& l : net.layers()) {
    if (l.has_params()) {
      g.layers.push_back({Tensor(l.params.weights.shape()), Tensor(l.params.biases.shape())});
    } else {
      g.layers.push_back({});
    }
  }
  return g;
}

void Gradients::add(const Gradients& other) {
  if (other.layers.size() != layers.size()) throw ShapeError("gradient sets have different depths");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& a = layers[i];
    const auto& b = other.layers[i];
    if (a.weights.shape() != b.weights.shape() || a.biases.shape() != b.biases.shape()) {
      throw ShapeError("gradient shapes differ at layer " + std::to_string(i));
    }
    for (std::size_t k = 0; k < a.weights.size(); ++k) a.weights[k] += b.weights[k];
    for (std::size_t k = 0; k < a.biases.size(); ++k) a.biases[k] += b.biases[k];
  }
}

void Gradients::scale(double factor) {
  for (auto& l : layers) {
    for (double& v : l.weights.values()) v *= factor;
    for (double& v : l.biases.values()) v *= factor;
  }
}

namespace {

void check_input(const Network& net, const Tensor& input) {
  if (!net.complete()) throw ShapeError("network does not end in softmax");
  if (input.size() != shape_volume(net.input_shape())) {
    throw ShapeError("layer 0: expected input " + shape_string(net.input_shape()) + ", got " +
                     shape_string(input.shape()));
  }
}

// Applies layer l to `in`, writing `out` (pre-shaped) and pool indices.
void apply_layer(const Layer& l, const Tensor& in, Tensor& out, std::vector<std::uint32_t>& argmax) {
  switch (l.kind) {
    case LayerKind::conv2d:
      kernels::conv2d_forward(l.conv_geometry(), in.values(), l.params.weights.values(), l.params.biases.values(),
                              out.values());
      break;
    case LayerKind::relu:
      for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
      break;
    case LayerKind::maxpool:
      argmax.resize(out.size());
      kernels::maxpool_forward(l.pool_geometry(), in.values(), out.values(), argmax);
      break;
    case LayerKind::flatten:
      std::copy(in.values().begin(), in.values().end(), out.values().begin());
      break;
    case LayerKind::dense:
      kernels::dense_forward(l.dense_geometry(), in.values(), l.params.weights.values(), l.params.biases.values(),
                             out.values());
      break;
    case LayerKind::softmax:
      break;
  }
}

}  // namespace

ForwardResult forward(const Network& net, const Tensor& input) {
  check_input(net, input);
  ForwardResult result;
  auto& trace = result.trace;
  const std::size_t n = net.depth() - 1;
  trace.activations.reserve(n + 1);
  trace.pool_argmax.resize(n);
  trace.activations.push_back(input.shape() == net.input_shape() ? input : input.reshaped(net.input_shape()));
  for (std::size_t i = 0; i < n; ++i) {
    const Layer& l = net.layer(i);
    Tensor out(l.out_shape);
    apply_layer(l, trace.activations.back(), out, trace.pool_argmax[i]);
    trace.activations.push_back(std::move(out));
  }
  result.logits = trace.activations.back();
  return result;
}

Tensor predict_logits(const Network& net, const Tensor& input) {
  check_input(net, input);
  Tensor cur = input.shape() == net.input_shape() ? input : input.reshaped(net.input_shape());
  std::vector<std::uint32_t> argmax;
  for (std::size_t i = 0; i + 1 < net.depth(); ++i) {
    const Layer& l = net.layer(i);
    Tensor out(l.out_shape);
    apply_layer(l, cur, out, argmax);
    cur = std::move(out);
  }
  return cur;
}

Tensor softmax_probabilities(const Tensor& logits) {
  Tensor p(logits.shape());
  const double m = *std::max_element(logits.values().begin(), logits.values().end());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    z += p[i];
  }
  for (double& v : p.values()) v /= z;
  return p;
}

OutputError output_error(const Tensor& logits, std::size_t label) {
  if (label >= logits.size()) {
    throw InvalidArgument("label " + std::to_string(label) + " out of range for " + std::to_string(logits.size()) +
                          " classes");
  }
  const double m = *std::max_element(logits.values().begin(), logits.values().end());
  double z = 0.0;
  for (double v : logits.values()) z += std::exp(v - m);
  const double log_z = m + std::log(z);
  OutputError err{log_z - logits[label], softmax_probabilities(logits)};
  err.delta[label] -= 1.0;
  return err;
}

void backward(const Network& net, const ActivationTrace& trace, const Tensor& delta_out, Gradients& grads) {
  const std::size_t n = net.depth() - 1;
  if (!net.complete() || trace.activations.size() != n + 1 || trace.pool_argmax.size() != n) {
    throw ShapeError("activation trace does not belong to this network");
  }
  if (grads.layers.size() != net.depth()) throw ShapeError("gradient set does not match network depth");
  for (std::size_t i = 0; i < n; ++i) {
    if (trace.activations[i + 1].shape() != net.layer(i).out_shape) {
      throw ShapeError("layer " + std::to_string(i) + ": trace holds " + shape_string(trace.activations[i + 1].shape()) +
                       ", expected " + shape_string(net.layer(i).out_shape));
    }
  }
  if (delta_out.size() != net.class_count()) throw ShapeError("output delta length does not match class count");

  // Error flowing into the output of layer i; layers below the lowest
  // trainable layer need no input error.
  std::size_t lowest_trainable = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (net.layer(i).has_params() && !net.layer(i).frozen) {
      lowest_trainable = i;
      break;
    }
  }
  Tensor delta = delta_out;
  for (std::size_t i = n; i-- > 0;) {
    if (i < lowest_trainable) break;
    const Layer& l = net.layer(i);
    const Tensor& in = trace.activations[i];
    const bool need_input_delta = i > lowest_trainable;
    Tensor prev;
    if (need_input_delta) prev = Tensor(l.in_shape);
    switch (l.kind) {
      case LayerKind::conv2d:
        if (!l.frozen) {
          kernels::conv2d_backward_weights(l.conv_geometry(), in.values(), delta.values(),
                                           grads.layers[i].weights.values(), grads.layers[i].biases.values());
        }
        if (need_input_delta) {
          kernels::conv2d_backward_input(l.conv_geometry(), l.params.weights.values(), delta.values(), prev.values());
        }
        break;
      case LayerKind::dense:
        if (!l.frozen) {
          kernels::dense_backward_weights(l.dense_geometry(), in.values(), delta.values(),
                                          grads.layers[i].weights.values(), grads.layers[i].biases.values());
        }
        if (need_input_delta) {
          kernels::dense_backward_input(l.dense_geometry(), l.params.weights.values(), delta.values(), prev.values());
        }
        break;
      case LayerKind::relu:
        // sigma'(0) := 0
        if (need_input_delta) {
          for (std::size_t k = 0; k < in.size(); ++k) prev[k] = in[k] > 0.0 ? delta[k] : 0.0;
        }
        break;
      case LayerKind::maxpool:
        if (need_input_delta) kernels::maxpool_backward(l.pool_geometry(), trace.pool_argmax[i], delta.values(), prev.values());
        break;
      case LayerKind::flatten:
        if (need_input_delta) std::copy(delta.values().begin(), delta.values().end(), prev.values().begin());
        break;
      case LayerKind::softmax:
        break;
    }
    if (need_input_delta) delta = std::move(prev);
  }
}

Gradients backward(const Network& net, const ActivationTrace& trace, const Tensor& delta_out) {
  Gradients grads = Gradients::zeros_like(net);
  backward(net, trace, delta_out, grads);
  return grads;
}

void sgd_step(Network& net, const Gradients& grads, double eta, double gamma) {
  if (!(eta > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (!(gamma >= 0.0)) throw InvalidArgument("cost must be non-negative");
  if (grads.layers.size() != net.depth()) throw ShapeError("gradient set does not match network depth");
  for (std::size_t i = 0; i < net.depth(); ++i) {
    const Layer& l = net.layer(i);
    const auto& g = grads.layers[i];
    if (g.weights.shape() != l.params.weights.shape() || g.biases.shape() != l.params.biases.shape()) {
      throw ShapeError("gradient shape mismatch at layer " + std::to_string(i));
    }
  }
  const double step = eta * gamma;
  if (step == 0.0) return;
  for (std::size_t i = 0; i < net.depth(); ++i) {
    Layer& l = net.layer(i);
    if (!l.has_params() || l.frozen) continue;
    const auto& g = grads.layers[i];
    auto w = l.params.weights.values();
    auto b = l.params.biases.values();
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= step * g.weights[k];
    for (std::size_t k = 0; k < b.size(); ++k) b[k] -= step * g.biases[k];
  }
}

}  // namespace dtl
