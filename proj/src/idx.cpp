#include "dtl/idx.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "dtl/error.hpp"

namespace dtl {

namespace {

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

bool is_gzip(const std::filesystem::path& path) { return path.extension() == ".gz"; }

}  // namespace

IdxArray parse_idx(const std::vector<std::uint8_t>& bytes) {
  using Kind = IdxError::Kind;
  if (bytes.size() < 4) throw IdxError(Kind::truncated, "IDX header truncated");
  if (bytes[0] != 0 || bytes[1] != 0 || bytes[2] != 0x08) {
    throw IdxError(Kind::bad_magic, "bad IDX magic (expected 00 00 08 nd)");
  }
  const std::size_t ndim = bytes[3];
  if (ndim == 0) throw IdxError(Kind::bad_magic, "IDX file declares zero dimensions");
  if (bytes.size() < 4 + 4 * ndim) throw IdxError(Kind::truncated, "IDX dimension table truncated");
  IdxArray out;
  std::size_t volume = 1;
  for (std::size_t i = 0; i < ndim; ++i) {
    out.dims.push_back(read_be32(bytes.data() + 4 + 4 * i));
    volume *= out.dims.back();
  }
  const std::size_t offset = 4 + 4 * ndim;
  if (bytes.size() - offset < volume) {
    throw IdxError(Kind::truncated, "IDX payload truncated: expected " + std::to_string(volume) + " bytes, found " +
                                        std::to_string(bytes.size() - offset));
  }
  if (bytes.size() - offset > volume) {
    throw IdxError(Kind::dimension_mismatch, "IDX payload longer than its dimensions declare");
  }
  out.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset), bytes.end());
  return out;
}

std::vector<std::uint8_t> encode_idx(const IdxArray& array) {
  std::vector<std::uint8_t> out = {0, 0, 0x08, static_cast<std::uint8_t>(array.dims.size())};
  for (std::uint32_t d : array.dims) write_be32(out, d);
  out.insert(out.end(), array.data.begin(), array.data.end());
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes;
  if (is_gzip(path)) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw IdxError(IdxError::Kind::io, "cannot open " + path.string());
    std::uint8_t buf[1 << 16];
    int n = 0;
    while ((n = gzread(f, buf, sizeof buf)) > 0) bytes.insert(bytes.end(), buf, buf + n);
    const bool failed = n < 0;
    gzclose(f);
    if (failed) throw IdxError(IdxError::Kind::truncated, "corrupt gzip stream in " + path.string());
    return bytes;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxError(IdxError::Kind::io, "cannot open " + path.string());
  bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  if (is_gzip(path)) {
    gzFile f = gzopen(path.c_str(), "wb");
    if (!f) throw IoError("cannot write " + path.string());
    const bool ok = bytes.empty() || gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size())) > 0;
    gzclose(f);
    if (!ok) throw IoError("gzip write failed for " + path.string());
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

LabelledDataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  using Kind = IdxError::Kind;
  const IdxArray images = parse_idx(read_file_bytes(images_path));
  const IdxArray labels = parse_idx(read_file_bytes(labels_path));
  if (images.dims.size() != 3) {
    throw IdxError(Kind::dimension_mismatch, "images file must have 3 dimensions, has " + std::to_string(images.dims.size()));
  }
  if (labels.dims.size() != 1) {
    throw IdxError(Kind::dimension_mismatch, "labels file must have 1 dimension, has " + std::to_string(labels.dims.size()));
  }
  if (images.dims[0] != labels.dims[0]) {
    throw IdxError(Kind::count_mismatch, std::to_string(images.dims[0]) + " images but " +
                                             std::to_string(labels.dims[0]) + " labels");
  }
  const std::size_t n = images.dims[0], h = images.dims[1], w = images.dims[2];
  if (n == 0) throw IdxError(Kind::dimension_mismatch, "IDX files hold no samples");
  std::vector<double> pixels(images.data.size());
  std::transform(images.data.begin(), images.data.end(), pixels.begin(), [](std::uint8_t b) { return b / 255.0; });
  std::vector<std::size_t> y(labels.data.begin(), labels.data.end());
  const std::size_t classes = std::max<std::size_t>(2, *std::max_element(y.begin(), y.end()) + 1);
  return LabelledDataset(Tensor({n, 1, h, w}, std::move(pixels)), std::move(y), classes);
}

void save_idx(const LabelledDataset& ds, const std::filesystem::path& images_path,
              const std::filesystem::path& labels_path) {
  const Shape s = ds.sample_shape();
  if (s.empty() || s[0] != 1) throw DatasetError("IDX export needs a single-channel dataset");
  IdxArray images{{static_cast<std::uint32_t>(ds.size()), static_cast<std::uint32_t>(s[1]), static_cast<std::uint32_t>(s[2])}, {}};
  images.data.reserve(ds.images().size());
  for (double v : ds.images().values()) images.data.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
  IdxArray labels{{static_cast<std::uint32_t>(ds.size())}, {}};
  for (std::size_t l : ds.labels()) {
    if (l > 255) throw DatasetError("IDX labels must fit in a byte");
    labels.data.push_back(static_cast<std::uint8_t>(l));
  }
  write_file_bytes(images_path, encode_idx(images));
  write_file_bytes(labels_path, encode_idx(labels));
}

}  // namespace dtl
