#include "dtl/training.hpp"

#include <numeric>

#include "dtl/error.hpp"

namespace dtl {

void HyperParams::validate() const {
  if (!(eta > 0.0)) throw InvalidArgument("eta must be positive");
  if (batch_size == 0) throw InvalidArgument("batch_size must be at least 1");
}

namespace {

void check_compatible(const Network& net, const LabelledDataset& data) {
  if (data.empty()) throw DatasetError("dataset is empty");
  if (data.sample_shape() != net.input_shape()) {
    throw ShapeError("dataset samples are " + shape_string(data.sample_shape()) + " but the network expects " +
                     shape_string(net.input_shape()));
  }
  if (data.class_count() != net.class_count()) {
    throw InvalidArgument("dataset has " + std::to_string(data.class_count()) + " classes, network has " +
                          std::to_string(net.class_count()));
  }
}

}  // namespace

std::size_t argmax(const Tensor& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

std::size_t predict(const Network& net, const Tensor& sample) { return argmax(predict_logits(net, sample)); }

std::vector<std::size_t> predict_all(const Network& net, const LabelledDataset& data) {
  check_compatible(net, data);
  std::vector<std::size_t> out(data.size());
  const auto n = static_cast<std::int64_t>(data.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) out[i] = predict(net, data.sample(static_cast<std::size_t>(i)));
  return out;
}

double evaluate(const Network& net, const LabelledDataset& data) {
  const auto predictions = predict_all(net, data);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) wrong += predictions[i] != data.label(i);
  return static_cast<double>(wrong) / static_cast<double>(data.size());
}

double batch_gradients(const Network& net, const LabelledDataset& data, std::span<const std::size_t> indices,
                       Gradients& grads) {
  grads = Gradients::zeros_like(net);
  double loss = 0.0;
  for (std::size_t i : indices) {
    const auto fwd = forward(net, data.sample(i));
    const auto err = output_error(fwd.logits, data.label(i));
    loss += err.loss;
    backward(net, fwd.trace, err.delta, grads);
  }
  const double inv = 1.0 / static_cast<double>(indices.size());
  grads.scale(inv);
  return loss * inv;
}

double train_epoch(Network& net, const LabelledDataset& data, const HyperParams& hp, double gamma, Rng& rng) {
  hp.validate();
  check_compatible(net, data);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));
  Gradients grads;
  double total = 0.0;
  for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
    const std::size_t end = std::min(order.size(), start + hp.batch_size);
    const std::span<const std::size_t> batch(order.data() + start, end - start);
    total += batch_gradients(net, data, batch, grads) * static_cast<double>(batch.size());
    sgd_step(net, grads, hp.eta, gamma);
  }
  return total / static_cast<double>(order.size());
}

Network train(Network net, const LabelledDataset& data, const HyperParams& hp, double gamma) {
  hp.validate();
  check_compatible(net, data);
  Rng rng(hp.seed);
  for (std::size_t e = 0; e < hp.epochs; ++e) train_epoch(net, data, hp, gamma, rng);
  return net;
}

}  // namespace dtl
