#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dtl/tensor.hpp"

namespace dtl {

/// N images of shape C x H x W with pixel values in [0, 1] and one label per
/// image. An empty dataset (N = 0) only arises from a zero split fraction.
class LabelledDataset {
 public:
  LabelledDataset() = default;
  LabelledDataset(Tensor images, std::vector<std::size_t> labels, std::size_t class_count);

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  std::size_t class_count() const { return class_count_; }
  const Tensor& images() const { return images_; }
  const std::vector<std::size_t>& labels() const { return labels_; }
  std::size_t label(std::size_t i) const { return labels_[i]; }

  /// Shape of one sample (C x H x W).
  Shape sample_shape() const;
  std::size_t sample_volume() const { return shape_volume(sample_shape()); }
  Tensor sample(std::size_t i) const;

  std::vector<std::size_t> class_histogram() const;

  LabelledDataset subset(const std::vector<std::size_t>& indices) const;
  /// Samples [begin, end).
  LabelledDataset slice(std::size_t begin, std::size_t end) const;

  friend bool operator==(const LabelledDataset&, const LabelledDataset&) = default;

 private:
  Tensor images_;
  std::vector<std::size_t> labels_;
  std::size_t class_count_ = 0;
};

/// Samples of both datasets, `a` first. Shapes and class counts must agree.
LabelledDataset concatenate(const LabelledDataset& a, const LabelledDataset& b);

/// Repeats the single gray channel three times.
LabelledDataset gray_to_rgb(const LabelledDataset& ds);

/// Unweighted mean of the three channels.
LabelledDataset rgb_to_gray(const LabelledDataset& ds);

/// Centered crop or zero-pad to height x width.
LabelledDataset fit_to(const LabelledDataset& ds, std::size_t height, std::size_t width);

/// 1 - pixel.
LabelledDataset invert(const LabelledDataset& ds);

struct SplitFractions {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

struct DatasetSplit {
  LabelledDataset train;
  LabelledDataset validation;
  LabelledDataset test;
};

/// Stratified, seeded split. Within each class the samples are shuffled and
/// each part receives the floor or ceiling of n * fraction (largest
/// remainder), except that a positive fraction always gets at least one
/// sample. Classes with fewer samples than positive fractions are rejected.
DatasetSplit split(const LabelledDataset& ds, const SplitFractions& fractions, std::uint64_t seed);

/// Index sets behind `split`, exposed for disjointness checks.
std::array<std::vector<std::size_t>, 3> split_indices(const LabelledDataset& ds, const SplitFractions& fractions,
                                                      std::uint64_t seed);

}  // namespace dtl
