#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "varbpr/learning.hpp"

namespace varbpr::learning {

/// Binary checkpoint, all integers and doubles little-endian:
///
///   magic      8 bytes  "VARBPRCK"
///   version    u32      kCheckpointVersion
///   dim        u64
///   users      u64
///   items      u64
///   echo_len   u64
///   echo       echo_len bytes (config echo, UTF-8 JSON)
///   user rows  users*dim f64, row-major
///   item rows  items*dim f64, row-major
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  EmbeddingModel model;
  std::string config_echo;
};

void save_checkpoint(const std::filesystem::path& path, const EmbeddingModel& model, const std::string& config_echo);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace varbpr::learning
