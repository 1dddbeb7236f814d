#pragma once

#include <cstdint>
#include <vector>

#include "dtl/dataset.hpp"
#include "dtl/network.hpp"
#include "dtl/rng.hpp"

namespace dtl {

struct HyperParams {
  double eta = 0.01;
  std::size_t batch_size = 64;
  std::size_t epochs = 30;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Argmax of the class scores; the lowest index wins ties.
std::size_t argmax(const Tensor& scores);
std::size_t predict(const Network& net, const Tensor& sample);
std::vector<std::size_t> predict_all(const Network& net, const LabelledDataset& data);

/// Fraction of misclassified samples.
double evaluate(const Network& net, const LabelledDataset& data);

/// Mean loss and batch-averaged gradients over `indices`.
double batch_gradients(const Network& net, const LabelledDataset& data, std::span<const std::size_t> indices,
                       Gradients& grads);

/// One shuffled pass of mini-batch SGD with updates scaled by `gamma`.
/// Returns the mean training loss over the epoch.
double train_epoch(Network& net, const LabelledDataset& data, const HyperParams& hp, double gamma, Rng& rng);

/// hp.epochs passes of train_epoch with a generator seeded from hp.seed.
Network train(Network net, const LabelledDataset& data, const HyperParams& hp, double gamma = 1.0);

}  // namespace dtl
