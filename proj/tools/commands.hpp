#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "varbpr/dataio.hpp"
#include "varbpr/evaluation.hpp"
#include "varbpr/learning.hpp"

namespace varbpr::cli {

/// Loaded log, split (plus configured noise) and signal buffers.
struct PreparedData {
  data::InteractionLog log;
  data::SplitBundle bundle;
  data::SignalBuffer signals;
};

PreparedData prepare_data(const ExperimentConfig& config);

/// Same log with a fresh split/noise/signal pass.
PreparedData with_noise(const PreparedData& clean, double rate, std::uint64_t seed);

struct RankingMetrics {
  double recall = 0.0;
  double ndcg = 0.0;
  double aplt = 0.0;
};

RankingMetrics ranking_metrics(const learning::EmbeddingModel& model, const PreparedData& data, std::size_t K);

/// Full diagnostics for one evaluation point.
eval::DiagnosticsRow evaluate_point(const learning::EmbeddingModel& model, const ExperimentConfig& config,
                                    const PreparedData& data, std::size_t epoch, double loss);

struct RunOutcome {
  learning::EmbeddingModel model;
  std::vector<learning::EpochStats> epochs;
  std::vector<eval::DiagnosticsRow> rows;
  RankingMetrics final_metrics;
};

/// Trains and evaluates every `eval.eval_every` epochs (and after the last).
/// With `with_rows` false only the final ranking metrics are computed.
RunOutcome run_experiment(const ExperimentConfig& config, const PreparedData& data, bool with_rows = true);

struct SweepRow {
  std::size_t pos_direction = 0;
  std::size_t neg_direction = 0;
  inference::PriorExponents lambda_pos;
  inference::PriorExponents lambda_neg;
  double strength = 0.0;
  RankingMetrics metrics;
  std::string status = "ok";
  bool pareto = false;
};

/// Direction (prior exponents) x strength (c_pos = c_neg) grid.
std::vector<SweepRow> run_sweep(const ExperimentConfig& config, const PreparedData& data);
void mark_pareto(std::vector<SweepRow>& rows);

struct AblationRow {
  std::string variant;
  learning::LossKind loss;
  learning::PosteriorMode posterior;
  RankingMetrics metrics;
};

/// full, w/o prior (uniform priors), w/o VI (uniform posteriors), w/o plug-in (double-sum loss).
std::vector<AblationRow> run_ablation(const ExperimentConfig& config, const PreparedData& data);

struct LikelihoodRow {
  std::string loss;
  double rate = 0.0;
  std::size_t epoch = 0;
  double likelihood = 0.0;
  double log_likelihood = 0.0;
};

std::vector<LikelihoodRow> run_robustness(const ExperimentConfig& config, const PreparedData& clean,
                                          const std::vector<double>& rates);

struct TimingRow {
  std::string loss;
  std::size_t M = 0;
  std::size_t N = 0;
  std::size_t epochs = 0;
  double mean_epoch_seconds = 0.0;
  double min_epoch_seconds = 0.0;
  std::size_t bag_size() const noexcept { return M + N; }
};

/// VarBPR epoch timings per bag size M+N (split evenly), plus a BPR row.
std::vector<TimingRow> run_scale(const ExperimentConfig& config, const PreparedData& data,
                                 const std::vector<std::size_t>& bag_sizes);

/// Coefficient of determination of the least-squares line through (x, y).
double linear_fit_r2(const std::vector<double>& x, const std::vector<double>& y);

void write_epochs_csv(const std::filesystem::path& path, const std::vector<eval::DiagnosticsRow>& rows);
void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);
void write_ablation_csv(const std::filesystem::path& path, const std::vector<AblationRow>& rows);
void write_likelihood_csv(const std::filesystem::path& path, const std::vector<LikelihoodRow>& rows);
void write_timing_csv(const std::filesystem::path& path, const std::vector<TimingRow>& rows);

// Verb entry points. Each writes into config.output_dir and returns the exit code.
int cmd_train(const ExperimentConfig& config);
int cmd_evaluate(const ExperimentConfig& config, const std::optional<std::filesystem::path>& checkpoint);
int cmd_sweep(const ExperimentConfig& config);
int cmd_ablate(const ExperimentConfig& config);
int cmd_robustness(const ExperimentConfig& config);
int cmd_scale(const ExperimentConfig& config);

}  // namespace varbpr::cli
