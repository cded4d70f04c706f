#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

namespace varbpr::cli {

/// Shape of a generated rating file in the ML-100K tab format.
struct SynthSpec {
  std::size_t users = 943;
  std::size_t items = 1682;
  std::size_t ratings = 100000;
  std::size_t min_per_user = 20;
  std::size_t latent_dim = 8;
  std::uint64_t seed = 7;
};

/// Writes a latent-factor rating log: users pick items in proportion to a
/// Zipf popularity times their latent affinity; ratings mix affinity, item
/// quality and noise, so popular but disliked items appear as low ratings.
void write_synthetic_ratings(const SynthSpec& spec, const std::filesystem::path& path);

}  // namespace varbpr::cli
