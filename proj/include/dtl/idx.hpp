#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dtl/dataset.hpp"

namespace dtl {

/// Raw IDX array of unsigned bytes: big-endian header, then row-major payload.
struct IdxArray {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;
};

/// Parses an in-memory IDX file (dtype 0x08 only).
IdxArray parse_idx(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_idx(const IdxArray& array);

/// Reads a whole file, transparently gunzipping names ending in ".gz".
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

/// MNIST-style image/label pair: images N x H x W, labels N. Pixels are
/// scaled by 1/255; class count is max label + 1 (at least 2).
LabelledDataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

/// Writes a single-channel dataset as an IDX pair, pixels rounded to bytes.
void save_idx(const LabelledDataset& ds, const std::filesystem::path& images_path,
              const std::filesystem::path& labels_path);

}  // namespace dtl
