#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "varbpr/dataio.hpp"
#include "varbpr/mathcore.hpp"
#include "varbpr/sampler.hpp"

namespace varbpr::inference {

using math::SimplexVector;

/// Exponents for (popularity-or-rarity, quality-or-bad-quality, hardness).
struct PriorExponents {
  double signal = 0.0;
  double quality = 0.0;
  double hardness = 0.0;
};

struct InferenceConfig {
  double c_pos = 4.0;
  double c_neg = 4.0;
  double tau = 1.0;
  PriorExponents lambda_pos{0.0, 1.0, 0.0};
  PriorExponents lambda_neg{0.0, 0.0, 0.5};

  void validate() const;
};

/// Unnormalized exposure (pos) and suppression (neg) weights over a bag.
struct PriorPair {
  std::vector<double> pos;
  std::vector<double> neg;
};

struct PosteriorPair {
  SimplexVector alpha;
  SimplexVector beta;
};

enum class Side { positive, negative };

inline constexpr double kPriorFloor = 1e-12;

/// Bag-wise hardness: softmax((mean - s)/tau) on the positive side,
/// softmax((s - mean)/tau) on the negative side. The mean includes every
/// bag member.
SimplexVector hardness_scores(std::span<const double> scores, Side side, double tau);

/// pi+_i ~ rar^l1 * qual^l2 * hard+^l3 and pi-_j ~ pop^l1 * (1-qual)^l2 * hard-^l3.
/// The quality factor is skipped for items without a quality signal. Entries
/// are floored at kPriorFloor and left unnormalized.
PriorPair encode_prior(const sampling::EnrichedInteraction& bag, const data::SignalBuffer& signals,
                       std::span<const double> pos_scores, std::span<const double> neg_scores,
                       const InferenceConfig& cfg);

/// Same encoding over an arbitrary item list on one side.
std::vector<double> encode_side_prior(std::span<const data::ItemId> items, const data::SignalBuffer& signals,
                                      std::span<const double> scores, Side side, const InferenceConfig& cfg);

/// alpha_m ~ pi_m exp(s_m / c).
SimplexVector posterior_positive(std::span<const double> scores, std::span<const double> prior, double c_pos);

/// beta_n ~ pi_n exp(-s_n / c).
SimplexVector posterior_negative(std::span<const double> scores, std::span<const double> prior, double c_neg);

PosteriorPair solve_posteriors(std::span<const double> pos_scores, std::span<const double> neg_scores,
                               const PriorPair& prior, const InferenceConfig& cfg);

/// Objective of the positive-side subproblem:
/// sum a_m s_m + c H(a) - c H(a, normalize(pi)).
double positive_objective(std::span<const double> alpha, std::span<const double> scores,
                          std::span<const double> prior, double c_pos);

/// Objective of the negative-side subproblem:
/// -sum b_n s_n + c H(b) - c H(b, normalize(pi)).
double negative_objective(std::span<const double> beta, std::span<const double> scores,
                          std::span<const double> prior, double c_neg);

using Vector = std::vector<double>;
using RowView = std::span<const double>;

/// c+ = sum alpha_m i_m and c- = sum beta_n j_n.
std::pair<Vector, Vector> interest_centers(std::span<const RowView> positives, std::span<const RowView> negatives,
                                           const PosteriorPair& post);

Vector weighted_center(std::span<const RowView> rows, const SimplexVector& weights);

}  // namespace varbpr::inference
