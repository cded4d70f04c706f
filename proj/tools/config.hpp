#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "varbpr/dataio.hpp"
#include "varbpr/learning.hpp"

namespace varbpr::cli {

/// Invalid or inconsistent configuration; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SplitKind { clean_test, implicit_80_20 };

struct DatasetConfig {
  std::filesystem::path path;
  data::Format format = data::Format::ml100k_tab;
  SplitKind split = SplitKind::clean_test;
  double test_fraction = 0.2;
};

struct EvalConfig {
  std::size_t K = 20;
  std::size_t eval_every = 1;
  std::size_t probe_bags = 2048;
  std::size_t likelihood_samples = 100;
  bool diagnostics = true;
};

enum class SweepMode { lockstep, grid };

struct SweepConfig {
  SweepMode mode = SweepMode::lockstep;
  std::size_t direction_steps = 6;
  std::vector<double> strengths{2.0, 4.0, 6.0, 8.0, 10.0};
  double lambda3_pos = 0.0;
  double lambda3_neg = 0.5;
};

struct RobustnessConfig {
  std::vector<double> rates{0.05, 0.10};
};

struct ScaleConfig {
  std::vector<std::size_t> bag_sizes{2, 4, 8, 16};
  std::size_t epochs = 3;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  learning::TrainConfig train;
  EvalConfig eval;
  double noise_rate = 0.0;
  std::filesystem::path output_dir = "out";
  SweepConfig sweep;
  RobustnessConfig robustness;
  ScaleConfig scale;

  /// Throws ConfigError.
  void validate() const;
};

/// Flat `section.key = value` lines; `#` starts a comment. Later keys win.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(const std::string& text);
KeyValues read_key_values(const std::filesystem::path& path);

/// Applies keys on top of `config`. Unknown keys and malformed values throw
/// ConfigError. Relative dataset paths resolve against `base_dir`.
void apply_key_values(ExperimentConfig& config, const KeyValues& values, const std::filesystem::path& base_dir);

/// Defaults overlaid with the file at `path`; validated.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every key with its effective value, in the file syntax.
KeyValues to_key_values(const ExperimentConfig& config);

/// Config echo as a JSON object string (keys sorted).
std::string config_echo_json(const ExperimentConfig& config);

}  // namespace varbpr::cli
