#include "varbpr/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace varbpr::learning {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr std::array<char, 8> kMagic = {'V', 'A', 'R', 'B', 'P', 'R', 'C', 'K'};

template <typename T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) throw std::runtime_error("checkpoint: truncated header");
  return value;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const EmbeddingModel& model, const std::string& config_echo) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, model.dim());
  put<std::uint64_t>(out, model.user_count());
  put<std::uint64_t>(out, model.item_count());
  put<std::uint64_t>(out, config_echo.size());
  out.write(config_echo.data(), static_cast<std::streamsize>(config_echo.size()));
  out.write(reinterpret_cast<const char*>(model.user_factors().data()),
            static_cast<std::streamsize>(model.user_factors().size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(model.item_factors().data()),
            static_cast<std::streamsize>(model.item_factors().size() * sizeof(double)));
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw std::runtime_error("checkpoint: bad magic");
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto dim = get<std::uint64_t>(in);
  const auto users = get<std::uint64_t>(in);
  const auto items = get<std::uint64_t>(in);
  const auto echo_len = get<std::uint64_t>(in);
  if (echo_len > (std::uint64_t{1} << 30)) throw std::runtime_error("checkpoint: implausible config echo length");

  std::string echo(echo_len, '\0');
  if (!in.read(echo.data(), static_cast<std::streamsize>(echo_len))) throw std::runtime_error("checkpoint: truncated echo");
  EmbeddingModel model(users, items, dim);
  auto read_table = [&](std::vector<double>& table) {
    if (!in.read(reinterpret_cast<char*>(table.data()), static_cast<std::streamsize>(table.size() * sizeof(double)))) {
      throw std::runtime_error("checkpoint: truncated factor table");
    }
  };
  read_table(model.user_factors());
  read_table(model.item_factors());
  return Checkpoint{std::move(model), std::move(echo)};
}

}  // namespace varbpr::learning
