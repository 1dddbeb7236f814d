#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dtl/dataset.hpp"

namespace dtl {

/// Recipe for a synthetic single-channel dataset of geometric glyphs. Each
/// class is one pattern identifier; `samples_per_class` fixes the exact class
/// histogram. `domain_shift` in [0, 1] morphs appearance: extra rotation,
/// thicker strokes, lower ink contrast and a striped background.
struct SyntheticSpec {
  std::vector<std::string> patterns;
  std::vector<std::size_t> samples_per_class;
  std::size_t image_size = 28;
  double noise_level = 0.05;
  double domain_shift = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Identifiers accepted in SyntheticSpec::patterns.
const std::vector<std::string>& pattern_names();

LabelledDataset synthesize(const SyntheticSpec& spec);

std::pair<LabelledDataset, LabelledDataset> synthesize_pair(const SyntheticSpec& primary, const SyntheticSpec& target);

}  // namespace dtl
