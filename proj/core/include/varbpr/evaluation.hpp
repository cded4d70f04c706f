#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "varbpr/dataio.hpp"
#include "varbpr/inference.hpp"
#include "varbpr/learning.hpp"
#include "varbpr/random.hpp"
#include "varbpr/sampler.hpp"

namespace varbpr::eval {

using data::ItemId;
using data::UserId;
using learning::EmbeddingModel;

/// Per-user top-K item ids; empty for users without training positives.
using RankedLists = std::vector<std::vector<ItemId>>;

/// Environment variable holding the evaluation thread count (default 1).
inline constexpr const char* kThreadsEnv = "VARBPR_EVAL_THREADS";
std::size_t eval_threads_from_env();

/// Full-catalog ranking excluding training positives. Ties go to the lower id.
RankedLists rank_topk(const EmbeddingModel& model, const data::SplitBundle& bundle, std::size_t K,
                      std::size_t threads = 1);

double recall_at_k(const RankedLists& lists, const std::vector<std::vector<ItemId>>& test_positives);

/// Binary relevance, log2(rank + 1) discount, truncated ideal DCG.
double ndcg_at_k(const RankedLists& lists, const std::vector<std::vector<ItemId>>& test_positives, std::size_t K);

/// Mean share of long-tail items per list, over users with a list.
double aplt_at_k(const RankedLists& lists, const data::SignalBuffer& signals, std::size_t K);

struct LikelihoodEstimate {
  double sigmoid_mean = 0.0;
  double log_mean = 0.0;
  std::size_t triplets = 0;
};

/// Mean sigma(s_ui - s_uj) over held-out positives i and sampled items j that
/// are neither train nor test positives.
LikelihoodEstimate likelihood_probe(const EmbeddingModel& model, const data::SplitBundle& bundle,
                                    std::size_t negatives_per_positive, Rng& rng);

/// Slack for the floating-point evaluation of 0 <= gap <= Var/8.
inline constexpr double kJensenSlack = 1e-12;

struct JensenBag {
  double gap = 0.0;       // ln sigma(E[G]) - E[ln sigma(G)]
  double variance = 0.0;  // Var(G) under (alpha, beta)
  bool within_bound() const noexcept { return gap >= -kJensenSlack && gap <= variance / 8.0 + kJensenSlack; }
};

JensenBag jensen_gap(std::span<const double> pos_scores, std::span<const double> neg_scores,
                     const inference::PosteriorPair& post);

struct JensenSummary {
  std::vector<JensenBag> bags;
  double mean_gap = 0.0;
  double median_gap = 0.0;
  double max_gap = 0.0;
  double mean_variance = 0.0;
  std::size_t violations = 0;
};

JensenSummary jensen_gap_probe(const EmbeddingModel& model, std::span<const sampling::EnrichedInteraction> bags,
                               const data::SignalBuffer& signals, const inference::InferenceConfig& cfg);

enum class ComplianceScope { bag, global };

struct Compliance {
  double pos = 0.0;
  double neg = 0.0;
};

/// Smoothing added to pooled user-level posteriors before renormalization.
inline constexpr double kPooledFloor = 1e-12;

/// Bag scope: mean KL(alpha || renormalized bag prior) over bags.
/// Global scope: per user, posterior mass pooled over the full positive and
/// negative supports, floored, renormalized, and compared with the user-level
/// prior; averaged over users that own at least one bag.
Compliance kl_compliance(const EmbeddingModel& model, const data::SplitBundle& bundle,
                         const data::SignalBuffer& signals, const inference::InferenceConfig& cfg,
                         std::span<const sampling::EnrichedInteraction> bags, ComplianceScope scope);

struct DiagnosticsRow {
  std::size_t epoch = 0;
  double loss = 0.0;
  double recall_k = 0.0;
  double ndcg_k = 0.0;
  double aplt_k = 0.0;
  double likelihood = 0.0;
  double log_likelihood = 0.0;
  double jensen_gap_mean = 0.0;
  double jensen_gap_max = 0.0;
  double margin_var_mean = 0.0;
  double kl_bag_pos = 0.0;
  double kl_bag_neg = 0.0;
  double kl_global_pos = 0.0;
  double kl_global_neg = 0.0;
};

std::string diagnostics_csv_header();
std::string to_csv(const DiagnosticsRow& row);

}  // namespace varbpr::eval
