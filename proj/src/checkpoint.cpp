#include "dtl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <map>
#include <fstream>
#include <sstream>

#include "dtl/error.hpp"

namespace dtl {

namespace {

using Kind = CheckpointError::Kind;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
}

void put_tensor(std::vector<std::uint8_t>& out, const Tensor& t) {
  for (double v : t.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

void get_tensor(const std::uint8_t*& p, Tensor& t) {
  for (double& v : t.values()) {
    v = static_cast<double>(std::bit_cast<float>(get_u32(p)));
    p += 4;
  }
}

std::uint64_t parse_u64(const std::string& text, const char* field) {
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(text, &pos);
    if (pos == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw CheckpointError(Kind::corrupt_payload, std::string("checkpoint header field '") + field + "' is malformed");
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Network& net, const CheckpointInfo& info) {
  std::ostringstream header;
  header << "dtl-checkpoint\n"
         << "version=" << kCheckpointVersion << "\n"
         << "architecture=" << net.descriptor() << "\n"
         << "seed=" << info.seed << "\n"
         << "config_hash=" << info.config_hash << "\n"
         << "epoch=" << info.epoch << "\n"
         << "parameters=" << net.parameter_count() << "\n";
  const std::string h = header.str();
  std::vector<std::uint8_t> out;
  out.reserve(4 + h.size() + 4 * net.parameter_count());
  put_u32(out, static_cast<std::uint32_t>(h.size()));
  out.insert(out.end(), h.begin(), h.end());
  for (const auto& l : net.layers()) {
    if (!l.has_params()) continue;
    put_tensor(out, l.params.weights);
    put_tensor(out, l.params.biases);
  }
  return out;
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes,
                             const std::optional<std::string>& expected_architecture) {
  if (bytes.size() < 4) throw CheckpointError(Kind::corrupt_payload, "checkpoint shorter than its length prefix");
  const std::uint32_t header_len = get_u32(bytes.data());
  if (bytes.size() - 4 < header_len) throw CheckpointError(Kind::corrupt_payload, "checkpoint header truncated");
  const std::string header(bytes.begin() + 4, bytes.begin() + 4 + header_len);

  std::istringstream in(header);
  std::string line;
  if (!std::getline(in, line) || line != "dtl-checkpoint") {
    throw CheckpointError(Kind::corrupt_payload, "not a dtl checkpoint");
  }
  std::map<std::string, std::string> fields;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw CheckpointError(Kind::corrupt_payload, "malformed checkpoint header line");
    fields[line.substr(0, eq)] = line.substr(eq + 1);
  }
  for (const char* key : {"version", "architecture", "seed", "config_hash", "epoch", "parameters"}) {
    if (!fields.count(key)) throw CheckpointError(Kind::corrupt_payload, std::string("checkpoint header lacks ") + key);
  }

  Checkpoint ck;
  ck.info.version = static_cast<std::uint32_t>(parse_u64(fields["version"], "version"));
  if (ck.info.version != kCheckpointVersion) {
    throw CheckpointError(Kind::version_mismatch, "checkpoint version " + std::to_string(ck.info.version) +
                                                      ", this build reads version " + std::to_string(kCheckpointVersion));
  }
  ck.info.architecture = fields["architecture"];
  ck.info.seed = parse_u64(fields["seed"], "seed");
  ck.info.config_hash = fields["config_hash"];
  ck.info.epoch = static_cast<std::size_t>(parse_u64(fields["epoch"], "epoch"));
  if (expected_architecture && *expected_architecture != ck.info.architecture) {
    throw CheckpointError(Kind::architecture_mismatch,
                          "checkpoint holds " + ck.info.architecture + ", expected " + *expected_architecture);
  }
  try {
    ck.network = Network::from_descriptor(ck.info.architecture);
  } catch (const Error& e) {
    throw CheckpointError(Kind::corrupt_payload, std::string("bad architecture descriptor: ") + e.what());
  }
  const std::uint64_t declared = parse_u64(fields["parameters"], "parameters");
  const std::size_t count = ck.network.parameter_count();
  const std::size_t payload = bytes.size() - 4 - header_len;
  if (declared != count || payload != 4 * count) {
    throw CheckpointError(Kind::corrupt_payload, "checkpoint payload is " + std::to_string(payload) + " bytes, expected " +
                                                     std::to_string(4 * count));
  }
  const std::uint8_t* p = bytes.data() + 4 + header_len;
  for (auto& l : ck.network.layers()) {
    if (!l.has_params()) continue;
    get_tensor(p, l.params.weights);
    get_tensor(p, l.params.biases);
  }
  return ck;
}

void save_checkpoint(const Network& net, const std::filesystem::path& path, const CheckpointInfo& info) {
  const auto bytes = encode_checkpoint(net, info);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError(Kind::io, "cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError(Kind::io, "write failed for checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const std::optional<std::string>& expected_architecture) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(Kind::io, "cannot read checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes, expected_architecture);
}

}  // namespace dtl
