#include "config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace varbpr::cli {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a number, got '" + value + "'");
  }
  return out;
}

std::size_t to_size(const std::string& key, const std::string& value) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> parts;
  std::stringstream in(value);
  std::string part;
  while (std::getline(in, part, ',')) {
    part = trim(part);
    if (!part.empty()) parts.push_back(part);
  }
  return parts;
}

std::vector<double> to_doubles(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& part : split_list(value)) out.push_back(to_double(key, part));
  if (out.empty()) throw ConfigError(key + ": expected a comma-separated list");
  return out;
}

inference::PriorExponents to_exponents(const std::string& key, const std::string& value) {
  const auto parts = to_doubles(key, value);
  if (parts.size() != 3) throw ConfigError(key + ": expected three exponents");
  return {parts[0], parts[1], parts[2]};
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t k = 0; k < parts.size(); ++k) out += (k ? "," : "") + parts[k];
  return out;
}

std::string format_exponents(const inference::PriorExponents& e) {
  return join({format_double(e.signal), format_double(e.quality), format_double(e.hardness)});
}

template <typename Fn>
void wrap(const std::string& key, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  try {
    train.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (dataset.path.empty()) throw ConfigError("dataset.path is required");
  if (!std::filesystem::exists(dataset.path)) throw ConfigError("dataset.path does not exist: " + dataset.path.string());
  if (!(dataset.test_fraction > 0.0 && dataset.test_fraction < 1.0)) {
    throw ConfigError("dataset.test_fraction must lie in (0, 1)");
  }
  if (eval.K < 1) throw ConfigError("eval.K must be >= 1");
  if (eval.eval_every < 1) throw ConfigError("eval.eval_every must be >= 1");
  if (eval.likelihood_samples < 1) throw ConfigError("eval.likelihood_samples must be >= 1");
  if (!(noise_rate >= 0.0 && noise_rate < 1.0)) throw ConfigError("noise.rate must lie in [0, 1)");
  if (sweep.direction_steps < 1) throw ConfigError("sweep.direction_steps must be >= 1");
  if (sweep.strengths.empty()) throw ConfigError("sweep.strengths must not be empty");
  for (double c : sweep.strengths) {
    if (!(c > 0.0)) throw ConfigError("sweep.strengths must be positive");
  }
  for (double r : robustness.rates) {
    if (!(r >= 0.0 && r < 1.0)) throw ConfigError("robustness.rates must lie in [0, 1)");
  }
  for (std::size_t s : scale.bag_sizes) {
    if (s < 2) throw ConfigError("scale.bag_sizes entries must be >= 2");
  }
  if (scale.epochs < 1) throw ConfigError("scale.epochs must be >= 1");
}

KeyValues parse_key_values(const std::string& text) {
  KeyValues values;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    values[key] = trim(line.substr(eq + 1));
  }
  return values;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_key_values(buffer.str());
}

void apply_key_values(ExperimentConfig& c, const KeyValues& values, const std::filesystem::path& base_dir) {
  for (const auto& [key, value] : values) {
    wrap(key, [&, &key = key, &value = value] {
      if (key == "dataset.path") {
        std::filesystem::path p(value);
        c.dataset.path = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
      } else if (key == "dataset.format") {
        c.dataset.format = data::parse_format(value);
      } else if (key == "dataset.split") {
        if (value == "clean_test") c.dataset.split = SplitKind::clean_test;
        else if (value == "implicit_80_20") c.dataset.split = SplitKind::implicit_80_20;
        else throw ConfigError(key + ": expected clean_test or implicit_80_20");
      } else if (key == "dataset.test_fraction") {
        c.dataset.test_fraction = to_double(key, value);
      } else if (key == "model.d") {
        c.train.dim = to_size(key, value);
      } else if (key == "model.lr") {
        c.train.lr = to_double(key, value);
      } else if (key == "model.l2") {
        c.train.l2 = to_double(key, value);
      } else if (key == "model.epochs") {
        c.train.epochs = to_size(key, value);
      } else if (key == "model.seed") {
        c.train.seed = to_size(key, value);
      } else if (key == "model.batch_size") {
        c.train.batch_size = to_size(key, value);
      } else if (key == "model.init_std") {
        c.train.init_std = to_double(key, value);
      } else if (key == "loss.kind") {
        c.train.loss = learning::parse_loss_kind(value);
      } else if (key == "loss.posterior") {
        c.train.posterior = learning::parse_posterior_mode(value);
      } else if (key == "loss.M") {
        c.train.M = to_size(key, value);
      } else if (key == "loss.N") {
        c.train.N = to_size(key, value);
      } else if (key == "loss.c_pos") {
        c.train.inference.c_pos = to_double(key, value);
      } else if (key == "loss.c_neg") {
        c.train.inference.c_neg = to_double(key, value);
      } else if (key == "loss.tau") {
        c.train.inference.tau = to_double(key, value);
      } else if (key == "loss.lambda_pos") {
        c.train.inference.lambda_pos = to_exponents(key, value);
      } else if (key == "loss.lambda_neg") {
        c.train.inference.lambda_neg = to_exponents(key, value);
      } else if (key == "eval.K") {
        c.eval.K = to_size(key, value);
      } else if (key == "eval.eval_every") {
        c.eval.eval_every = to_size(key, value);
      } else if (key == "eval.probe_bags") {
        c.eval.probe_bags = to_size(key, value);
      } else if (key == "eval.likelihood_samples") {
        c.eval.likelihood_samples = to_size(key, value);
      } else if (key == "eval.diagnostics") {
        c.eval.diagnostics = to_bool(key, value);
      } else if (key == "noise.rate") {
        c.noise_rate = to_double(key, value);
      } else if (key == "output.directory") {
        c.output_dir = value;
      } else if (key == "sweep.mode") {
        if (value == "lockstep") c.sweep.mode = SweepMode::lockstep;
        else if (value == "grid") c.sweep.mode = SweepMode::grid;
        else throw ConfigError(key + ": expected lockstep or grid");
      } else if (key == "sweep.direction_steps") {
        c.sweep.direction_steps = to_size(key, value);
      } else if (key == "sweep.strengths") {
        c.sweep.strengths = to_doubles(key, value);
      } else if (key == "sweep.lambda3_pos") {
        c.sweep.lambda3_pos = to_double(key, value);
      } else if (key == "sweep.lambda3_neg") {
        c.sweep.lambda3_neg = to_double(key, value);
      } else if (key == "robustness.rates") {
        c.robustness.rates = to_doubles(key, value);
      } else if (key == "scale.bag_sizes") {
        c.scale.bag_sizes.clear();
        for (const auto& part : split_list(value)) c.scale.bag_sizes.push_back(to_size(key, part));
        if (c.scale.bag_sizes.empty()) throw ConfigError(key + ": expected a comma-separated list");
      } else if (key == "scale.epochs") {
        c.scale.epochs = to_size(key, value);
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    });
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  ExperimentConfig config;
  apply_key_values(config, read_key_values(path), path.parent_path());
  config.validate();
  return config;
}

KeyValues to_key_values(const ExperimentConfig& c) {
  KeyValues kv;
  kv["dataset.path"] = c.dataset.path.string();
  kv["dataset.format"] = std::string(data::format_name(c.dataset.format));
  kv["dataset.split"] = c.dataset.split == SplitKind::clean_test ? "clean_test" : "implicit_80_20";
  kv["dataset.test_fraction"] = format_double(c.dataset.test_fraction);
  kv["model.d"] = std::to_string(c.train.dim);
  kv["model.lr"] = format_double(c.train.lr);
  kv["model.l2"] = format_double(c.train.l2);
  kv["model.epochs"] = std::to_string(c.train.epochs);
  kv["model.seed"] = std::to_string(c.train.seed);
  kv["model.batch_size"] = std::to_string(c.train.batch_size);
  kv["model.init_std"] = format_double(c.train.init_std);
  kv["loss.kind"] = std::string(learning::loss_kind_name(c.train.loss));
  kv["loss.posterior"] = std::string(learning::posterior_mode_name(c.train.posterior));
  kv["loss.M"] = std::to_string(c.train.M);
  kv["loss.N"] = std::to_string(c.train.N);
  kv["loss.c_pos"] = format_double(c.train.inference.c_pos);
  kv["loss.c_neg"] = format_double(c.train.inference.c_neg);
  kv["loss.tau"] = format_double(c.train.inference.tau);
  kv["loss.lambda_pos"] = format_exponents(c.train.inference.lambda_pos);
  kv["loss.lambda_neg"] = format_exponents(c.train.inference.lambda_neg);
  kv["eval.K"] = std::to_string(c.eval.K);
  kv["eval.eval_every"] = std::to_string(c.eval.eval_every);
  kv["eval.probe_bags"] = std::to_string(c.eval.probe_bags);
  kv["eval.likelihood_samples"] = std::to_string(c.eval.likelihood_samples);
  kv["eval.diagnostics"] = c.eval.diagnostics ? "true" : "false";
  kv["noise.rate"] = format_double(c.noise_rate);
  kv["output.directory"] = c.output_dir.string();
  kv["sweep.mode"] = c.sweep.mode == SweepMode::lockstep ? "lockstep" : "grid";
  kv["sweep.direction_steps"] = std::to_string(c.sweep.direction_steps);
  std::vector<std::string> parts;
  for (double s : c.sweep.strengths) parts.push_back(format_double(s));
  kv["sweep.strengths"] = join(parts);
  kv["sweep.lambda3_pos"] = format_double(c.sweep.lambda3_pos);
  kv["sweep.lambda3_neg"] = format_double(c.sweep.lambda3_neg);
  parts.clear();
  for (double r : c.robustness.rates) parts.push_back(format_double(r));
  kv["robustness.rates"] = join(parts);
  parts.clear();
  for (std::size_t s : c.scale.bag_sizes) parts.push_back(std::to_string(s));
  kv["scale.bag_sizes"] = join(parts);
  kv["scale.epochs"] = std::to_string(c.scale.epochs);
  return kv;
}

std::string config_echo_json(const ExperimentConfig& config) {
  nlohmann::json echo = nlohmann::json::object();
  for (const auto& [key, value] : to_key_values(config)) echo[key] = value;
  return echo.dump();
}

}  // namespace varbpr::cli
