#include <CLI11.hpp>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "commands.hpp"
#include "config.hpp"
#include "synth.hpp"
#include "varbpr/dataio.hpp"
#include "varbpr/learning.hpp"

namespace {

// 0 success, 1 runtime/data error, 2 config error, 3 numeric failure.
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace varbpr;
  CLI::App app{"Variational Bayesian pairwise ranking: training, evaluation and experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> checkpoint;
  std::optional<std::string> grid;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config (key = value lines)")->required();
    sub->add_option("--out", out_dir, "output directory, overrides output.directory");
    sub->add_option("--seed", seed, "overrides model.seed");
  };
  auto* train = app.add_subcommand("train", "train a model and write epochs.csv, report.json, model.ckpt");
  auto* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint on the configured split");
  auto* sweep = app.add_subcommand("sweep", "prior direction x strength sweep, writes pareto.csv");
  auto* ablate = app.add_subcommand("ablate", "ablation table, writes table.csv");
  auto* robustness = app.add_subcommand("robustness", "likelihood under injected noise, writes likelihood.csv");
  auto* scale = app.add_subcommand("scale", "epoch time versus bag size, writes timing.csv");
  for (auto* sub : {train, evaluate, sweep, ablate, robustness, scale}) add_common(sub);
  evaluate->add_option("--checkpoint", checkpoint, "checkpoint path (default <out>/model.ckpt)");
  sweep->add_option("--grid", grid, "file with sweep.* keys; switches to the full direction grid");

  auto* synth = app.add_subcommand("synth", "write a synthetic rating log in the ML-100K tab format");
  cli::SynthSpec spec;
  std::string synth_path;
  synth->add_option("--out", synth_path, "output file")->required();
  synth->add_option("--users", spec.users);
  synth->add_option("--items", spec.items);
  synth->add_option("--ratings", spec.ratings);
  synth->add_option("--min-per-user", spec.min_per_user);
  synth->add_option("--seed", spec.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (synth->parsed()) {
      cli::write_synthetic_ratings(spec, synth_path);
      return 0;
    }

    auto config = cli::load_config(config_path);
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (seed) config.train.seed = *seed;
    if (grid) {
      config.sweep.mode = cli::SweepMode::grid;
      const auto path = std::filesystem::path(*grid);
      cli::apply_key_values(config, cli::read_key_values(path), path.parent_path());
    }
    config.validate();

    if (train->parsed()) return cli::cmd_train(config);
    if (evaluate->parsed())
      return cli::cmd_evaluate(config, checkpoint ? std::optional<std::filesystem::path>(*checkpoint) : std::nullopt);
    if (sweep->parsed()) return cli::cmd_sweep(config);
    if (ablate->parsed()) return cli::cmd_ablate(config);
    if (robustness->parsed()) return cli::cmd_robustness(config);
    if (scale->parsed()) return cli::cmd_scale(config);
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const learning::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const data::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
