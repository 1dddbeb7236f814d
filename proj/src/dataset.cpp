#include "dtl/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "dtl/error.hpp"
#include "dtl/rng.hpp"

namespace dtl {

LabelledDataset::LabelledDataset(Tensor images, std::vector<std::size_t> labels, std::size_t class_count)
    : images_(std::move(images)), labels_(std::move(labels)), class_count_(class_count) {
  if (images_.shape().size() != 4) throw DatasetError("images must be N x C x H x W, got " + shape_string(images_.shape()));
  if (images_.shape()[0] != labels_.size()) {
    throw DatasetError("image count " + std::to_string(images_.shape()[0]) + " does not match label count " +
                       std::to_string(labels_.size()));
  }
  if (class_count_ < 2) throw DatasetError("a dataset needs at least 2 classes");
  for (std::size_t l : labels_) {
    if (l >= class_count_) throw DatasetError("label " + std::to_string(l) + " out of range");
  }
  for (double v : images_.values()) {
    if (!(v >= 0.0 && v <= 1.0)) throw DatasetError("pixel value outside [0, 1]");
  }
}

Shape LabelledDataset::sample_shape() const {
  const auto& s = images_.shape();
  if (s.size() != 4) return {};
  return {s[1], s[2], s[3]};
}

Tensor LabelledDataset::sample(std::size_t i) const {
  const std::size_t v = sample_volume();
  const auto begin = images_.values().begin() + static_cast<std::ptrdiff_t>(i * v);
  return Tensor(sample_shape(), std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(v)));
}

std::vector<std::size_t> LabelledDataset::class_histogram() const {
  std::vector<std::size_t> h(class_count_, 0);
  for (std::size_t l : labels_) ++h[l];
  return h;
}

LabelledDataset LabelledDataset::subset(const std::vector<std::size_t>& indices) const {
  const std::size_t v = sample_volume();
  Shape s = images_.shape();
  s[0] = indices.size();
  std::vector<double> data;
  data.reserve(indices.size() * v);
  std::vector<std::size_t> labels;
  labels.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= size()) throw DatasetError("subset index out of range");
    const auto begin = images_.values().begin() + static_cast<std::ptrdiff_t>(i * v);
    data.insert(data.end(), begin, begin + static_cast<std::ptrdiff_t>(v));
    labels.push_back(labels_[i]);
  }
  LabelledDataset out;
  out.images_ = Tensor(std::move(s), std::move(data));
  out.labels_ = std::move(labels);
  out.class_count_ = class_count_;
  return out;
}

LabelledDataset LabelledDataset::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > size()) throw DatasetError("slice [" + std::to_string(begin) + ", " + std::to_string(end) + ") out of range");
  std::vector<std::size_t> idx(end - begin);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = begin + i;
  return subset(idx);
}

LabelledDataset concatenate(const LabelledDataset& a, const LabelledDataset& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.sample_shape() != b.sample_shape() || a.class_count() != b.class_count()) {
    throw DatasetError("cannot concatenate datasets of different shape or class count");
  }
  Shape s = a.images().shape();
  s[0] = a.size() + b.size();
  std::vector<double> data(a.images().values().begin(), a.images().values().end());
  data.insert(data.end(), b.images().values().begin(), b.images().values().end());
  std::vector<std::size_t> labels = a.labels();
  labels.insert(labels.end(), b.labels().begin(), b.labels().end());
  return LabelledDataset(Tensor(std::move(s), std::move(data)), std::move(labels), a.class_count());
}

LabelledDataset gray_to_rgb(const LabelledDataset& ds) {
  const Shape s = ds.sample_shape();
  if (s.empty() || s[0] != 1) throw DatasetError("gray_to_rgb needs 1 channel, got " + shape_string(s));
  const std::size_t plane = s[1] * s[2];
  Tensor out({ds.size(), 3, s[1], s[2]});
  for (std::size_t n = 0; n < ds.size(); ++n) {
    for (std::size_t c = 0; c < 3; ++c) {
      std::copy_n(ds.images().data() + n * plane, plane, out.data() + (n * 3 + c) * plane);
    }
  }
  return LabelledDataset(std::move(out), ds.labels(), ds.class_count());
}

LabelledDataset rgb_to_gray(const LabelledDataset& ds) {
  const Shape s = ds.sample_shape();
  if (s.empty() || s[0] != 3) throw DatasetError("rgb_to_gray needs 3 channels, got " + shape_string(s));
  const std::size_t plane = s[1] * s[2];
  Tensor out({ds.size(), 1, s[1], s[2]});
  const double* in = ds.images().data();
  for (std::size_t n = 0; n < ds.size(); ++n) {
    for (std::size_t p = 0; p < plane; ++p) {
      const double r = in[(n * 3 + 0) * plane + p];
      const double g = in[(n * 3 + 1) * plane + p];
      const double b = in[(n * 3 + 2) * plane + p];
      out[n * plane + p] = std::clamp((r + g + b) / 3.0, 0.0, 1.0);
    }
  }
  return LabelledDataset(std::move(out), ds.labels(), ds.class_count());
}

LabelledDataset fit_to(const LabelledDataset& ds, std::size_t height, std::size_t width) {
  const Shape s = ds.sample_shape();
  if (s.empty()) throw DatasetError("fit_to on an empty dataset");
  if (s[1] == height && s[2] == width) return ds;
  const std::size_t ch = s[0];
  Tensor out({ds.size(), ch, height, width});
  // Offsets of the source window relative to the destination, centered.
  const auto offset = [](std::size_t from, std::size_t to) {
    return static_cast<std::ptrdiff_t>(from / 2) - static_cast<std::ptrdiff_t>(to / 2);
  };
  const std::ptrdiff_t oy = offset(s[1], height), ox = offset(s[2], width);
  for (std::size_t n = 0; n < ds.size(); ++n) {
    for (std::size_t c = 0; c < ch; ++c) {
      for (std::size_t y = 0; y < height; ++y) {
        const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y) + oy;
        if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(s[1])) continue;
        for (std::size_t x = 0; x < width; ++x) {
          const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x) + ox;
          if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(s[2])) continue;
          out[((n * ch + c) * height + y) * width + x] =
              ds.images()[((n * ch + c) * s[1] + static_cast<std::size_t>(sy)) * s[2] + static_cast<std::size_t>(sx)];
        }
      }
    }
  }
  return LabelledDataset(std::move(out), ds.labels(), ds.class_count());
}

LabelledDataset invert(const LabelledDataset& ds) {
  Tensor out = ds.images();
  for (double& v : out.values()) v = 1.0 - v;
  return LabelledDataset(std::move(out), ds.labels(), ds.class_count());
}

std::array<std::vector<std::size_t>, 3> split_indices(const LabelledDataset& ds, const SplitFractions& f,
                                                      std::uint64_t seed) {
  const double parts[3] = {f.train, f.validation, f.test};
  for (double p : parts) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw InvalidArgument("split fractions must be non-negative");
  }
  if (std::abs(f.train + f.validation + f.test - 1.0) > 1e-9) throw InvalidArgument("split fractions must sum to 1");
  const std::size_t nonzero = static_cast<std::size_t>(std::count_if(std::begin(parts), std::end(parts), [](double p) { return p > 0.0; }));

  std::vector<std::vector<std::size_t>> by_class(ds.class_count());
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.label(i)].push_back(i);

  std::array<std::vector<std::size_t>, 3> out;
  Rng rng(seed);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    if (members.empty()) continue;
    if (members.size() < nonzero) {
      throw InvalidArgument("class " + std::to_string(c) + " has " + std::to_string(members.size()) +
                            " samples, fewer than the " + std::to_string(nonzero) + " split parts");
    }
    rng.shuffle(std::span<std::size_t>(members));
    const std::size_t n = members.size();
    // Largest remainder: every part gets the floor or ceiling of its quota.
    std::array<std::size_t, 3> count{};
    std::array<double, 3> remainder{};
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      const double quota = static_cast<double>(n) * parts[k];
      count[k] = static_cast<std::size_t>(std::floor(quota));
      remainder[k] = quota - static_cast<double>(count[k]);
      assigned += count[k];
    }
    while (assigned > n) {
      --*std::max_element(count.begin(), count.end());
      --assigned;
    }
    for (; assigned < n; ++assigned) {
      const auto k = static_cast<std::size_t>(std::max_element(remainder.begin(), remainder.end()) - remainder.begin());
      ++count[k];
      remainder[k] = -1.0;
    }
    // Tiny classes: positive parts keep at least one sample, taken from the largest part.
    for (std::size_t k = 0; k < 3; ++k) {
      if (parts[k] > 0.0 && count[k] == 0) {
        --*std::max_element(count.begin(), count.end());
        count[k] = 1;
      }
    }
    const std::size_t n_train = count[0], n_val = count[1];
    out[0].insert(out[0].end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
    out[1].insert(out[1].end(), members.begin() + static_cast<std::ptrdiff_t>(n_train),
                  members.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    out[2].insert(out[2].end(), members.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), members.end());
  }
  for (auto& part : out) std::sort(part.begin(), part.end());
  return out;
}

DatasetSplit split(const LabelledDataset& ds, const SplitFractions& fractions, std::uint64_t seed) {
  auto idx = split_indices(ds, fractions, seed);
  return {ds.subset(idx[0]), ds.subset(idx[1]), ds.subset(idx[2])};
}

}  // namespace dtl
