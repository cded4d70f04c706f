#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "varbpr/dataio.hpp"
#include "varbpr/inference.hpp"
#include "varbpr/optimizer.hpp"
#include "varbpr/random.hpp"
#include "varbpr/sampler.hpp"

namespace varbpr::learning {

using data::ItemId;
using data::UserId;
using inference::RowView;
using inference::Vector;

enum class LossKind { bpr, varbpr, varbpr_elbo };
/// `uniform` replaces the closed-form posteriors with uniform weights.
enum class PosteriorMode { closed_form, uniform };

LossKind parse_loss_kind(std::string_view name);
std::string_view loss_kind_name(LossKind kind);
PosteriorMode parse_posterior_mode(std::string_view name);
std::string_view posterior_mode_name(PosteriorMode mode);

/// User and item factor tables, row-major. score(u, i) = <u, i>.
class EmbeddingModel {
 public:
  EmbeddingModel(std::size_t users, std::size_t items, std::size_t dim);

  /// i.i.d. normal(0, stddev) initialization.
  static EmbeddingModel random_normal(std::size_t users, std::size_t items, std::size_t dim, double stddev, Rng& rng);

  std::size_t user_count() const noexcept { return users_; }
  std::size_t item_count() const noexcept { return items_; }
  std::size_t dim() const noexcept { return dim_; }

  RowView user_row(UserId u) const { return {user_factors_.data() + std::size_t{u} * dim_, dim_}; }
  RowView item_row(ItemId i) const { return {item_factors_.data() + std::size_t{i} * dim_, dim_}; }
  std::span<double> user_row(UserId u) { return {user_factors_.data() + std::size_t{u} * dim_, dim_}; }
  std::span<double> item_row(ItemId i) { return {item_factors_.data() + std::size_t{i} * dim_, dim_}; }

  std::vector<double>& user_factors() noexcept { return user_factors_; }
  std::vector<double>& item_factors() noexcept { return item_factors_; }
  const std::vector<double>& user_factors() const noexcept { return user_factors_; }
  const std::vector<double>& item_factors() const noexcept { return item_factors_; }

  /// Throws std::domain_error for out-of-range ids.
  double score(UserId u, ItemId i) const;

  bool all_finite() const noexcept;

 private:
  std::size_t users_;
  std::size_t items_;
  std::size_t dim_;
  std::vector<double> user_factors_;
  std::vector<double> item_factors_;
};

double bpr_loss(double margin);

/// -ln sigma(<u, c+> - <u, c->).
double varbpr_loss(RowView user, RowView c_plus, RowView c_minus);

/// -sum_m sum_n alpha_m beta_n ln sigma(<u, i_m> - <u, j_n>).
double elbo_loss(RowView user, std::span<const RowView> positives, std::span<const RowView> negatives,
                 const inference::PosteriorPair& post);

/// Gradients w.r.t. the user vector and each bag slot, including 2*l2*param
/// weight decay on every slot.
struct BagGradients {
  Vector user;
  std::vector<Vector> positives;
  std::vector<Vector> negatives;
};

BagGradients bpr_gradients(RowView user, RowView positive, RowView negative, double l2);

/// Plug-in loss gradients with (alpha, beta) held constant.
BagGradients varbpr_gradients(RowView user, std::span<const RowView> positives, std::span<const RowView> negatives,
                              const inference::PosteriorPair& post, double l2);

/// Double-sum loss gradients with (alpha, beta) held constant.
BagGradients elbo_gradients(RowView user, std::span<const RowView> positives, std::span<const RowView> negatives,
                            const inference::PosteriorPair& post, double l2);

/// Scores, prior and posteriors for one bag under the current model.
struct BagInference {
  std::vector<double> pos_scores;
  std::vector<double> neg_scores;
  inference::PriorPair prior;
  inference::PosteriorPair post;
};

BagInference infer_bag(const EmbeddingModel& model, const sampling::EnrichedInteraction& bag,
                       const data::SignalBuffer& signals, const inference::InferenceConfig& cfg,
                       PosteriorMode mode = PosteriorMode::closed_form);

struct TrainConfig {
  LossKind loss = LossKind::varbpr;
  PosteriorMode posterior = PosteriorMode::closed_form;
  std::size_t dim = 64;
  double lr = 1e-3;
  double l2 = 1e-4;
  std::size_t epochs = 100;
  std::size_t M = 4;
  std::size_t N = 4;
  /// Bags per Adam step; 1 is the determinism reference.
  std::size_t batch_size = 1;
  double init_std = 0.01;
  std::uint64_t seed = 2024;
  inference::InferenceConfig inference;

  void validate() const;
  /// Bag sizes actually drawn; BPR always trains on single pairs.
  std::size_t effective_M() const noexcept { return loss == LossKind::bpr ? 1 : M; }
  std::size_t effective_N() const noexcept { return loss == LossKind::bpr ? 1 : N; }
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  std::size_t bags = 0;
  double seconds = 0.0;
};

/// Raised when a loss or parameter becomes non-finite.
class NumericError : public std::runtime_error {
 public:
  NumericError(std::size_t epoch, std::size_t bag, double user_norm, double max_item_norm);
  std::size_t epoch;
  std::size_t bag;
  double user_norm;
  double max_item_norm;
};

/// Algorithm loop: per bag score, encode prior, solve posteriors, accumulate
/// loss gradients; one sparse Adam step per batch.
class Trainer {
 public:
  Trainer(TrainConfig config, const data::SplitBundle& bundle, const data::SignalBuffer& signals);

  EpochStats run_epoch();
  const EmbeddingModel& model() const noexcept { return model_; }
  EmbeddingModel& model() noexcept { return model_; }
  const TrainConfig& config() const noexcept { return config_; }
  std::size_t epochs_done() const noexcept { return epoch_; }

 private:
  double accumulate_bag(const sampling::EnrichedInteraction& bag);
  void apply_batch();

  TrainConfig config_;
  const data::SplitBundle& bundle_;
  const data::SignalBuffer& signals_;
  EmbeddingModel model_;
  OptimizerState optimizer_;
  Rng sample_rng_;
  std::size_t epoch_ = 0;

  std::vector<double> user_grad_;
  std::vector<double> item_grad_;
  std::vector<char> user_touched_;
  std::vector<char> item_touched_;
  std::vector<std::size_t> touched_users_;
  std::vector<std::size_t> touched_items_;
};

using EpochCallback = std::function<void(const EpochStats&, const EmbeddingModel&)>;

struct TrainResult {
  EmbeddingModel model;
  std::vector<EpochStats> epochs;
};

TrainResult train(const TrainConfig& config, const data::SplitBundle& bundle, const data::SignalBuffer& signals,
                  const EpochCallback& on_epoch = {});

}  // namespace varbpr::learning
