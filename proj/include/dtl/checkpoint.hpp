#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dtl/network.hpp"

namespace dtl {

// Layout:
//   u32 LE   header length H
//   H bytes  UTF-8 header, one `key=value` per line:
//              dtl-checkpoint
//              version=1
//              architecture=<Network::descriptor()>
//              seed=<u64>
//              config_hash=<hex>
//              epoch=<n>
//              parameters=<count>
//   4 * count bytes: f32 LE weights then biases of each parameterized layer,
//   in layer order.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointInfo {
  std::uint32_t version = kCheckpointVersion;
  std::string architecture;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::size_t epoch = 0;
};

struct Checkpoint {
  Network network;
  CheckpointInfo info;
};

std::vector<std::uint8_t> encode_checkpoint(const Network& net, const CheckpointInfo& info);

/// Throws CheckpointError (version, corrupt payload, or architecture mismatch
/// when `expected_architecture` is given and differs).
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes,
                             const std::optional<std::string>& expected_architecture = std::nullopt);

void save_checkpoint(const Network& net, const std::filesystem::path& path, const CheckpointInfo& info = {});
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::optional<std::string>& expected_architecture = std::nullopt);

}  // namespace dtl
