#include "varbpr/inference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace varbpr::inference {

namespace {

void check_exponents(const PriorExponents& e) {
  if (!(e.signal >= 0.0 && e.quality >= 0.0 && e.hardness >= 0.0)) {
    throw std::domain_error("prior exponents must be non-negative");
  }
}

void check_prior(std::span<const double> scores, std::span<const double> prior) {
  if (scores.empty()) throw std::domain_error("posterior: empty bag");
  if (scores.size() != prior.size()) throw std::domain_error("posterior: prior/score length mismatch");
  for (double p : prior) {
    if (!(p > 0.0) || !std::isfinite(p)) throw std::domain_error("posterior: prior entries must be positive");
  }
}

double power_or_one(double base, double exponent) {
  return exponent == 0.0 ? 1.0 : std::pow(base, exponent);
}

// sum a ln a - sum a ln(pi / sum pi), i.e. KL(a || normalized prior) with 0 ln 0 = 0.
double kl_to_prior(std::span<const double> weights, std::span<const double> prior) {
  double total = 0.0;
  for (double p : prior) total += p;
  double kl = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] > 0.0) kl += weights[k] * std::log(weights[k] * total / prior[k]);
  }
  return kl;
}

}  // namespace

void InferenceConfig::validate() const {
  if (!(c_pos > 0.0) || !(c_neg > 0.0)) throw std::domain_error("c_pos and c_neg must be positive");
  if (!(tau > 0.0)) throw std::domain_error("tau must be positive");
  check_exponents(lambda_pos);
  check_exponents(lambda_neg);
}

SimplexVector hardness_scores(std::span<const double> scores, Side side, double tau) {
  if (scores.empty()) throw std::domain_error("hardness_scores: empty scores");
  double mean = 0.0;
  for (double s : scores) {
    if (!std::isfinite(s)) throw std::domain_error("hardness_scores: non-finite score");
    mean += s;
  }
  mean /= static_cast<double>(scores.size());
  std::vector<double> logits(scores.size());
  for (std::size_t k = 0; k < scores.size(); ++k) {
    logits[k] = side == Side::positive ? mean - scores[k] : scores[k] - mean;
  }
  return math::stable_softmax(logits, tau);
}

std::vector<double> encode_side_prior(std::span<const data::ItemId> items, const data::SignalBuffer& signals,
                                      std::span<const double> scores, Side side, const InferenceConfig& cfg) {
  if (items.size() != scores.size()) throw std::domain_error("encode_prior: item/score length mismatch");
  const PriorExponents& lambda = side == Side::positive ? cfg.lambda_pos : cfg.lambda_neg;
  std::vector<double> prior(items.size(), 1.0);
  if (items.empty()) return prior;

  std::vector<double> hardness;
  if (lambda.hardness != 0.0) {
    const auto h = hardness_scores(scores, side, cfg.tau);
    hardness.assign(h.begin(), h.end());
  }
  for (std::size_t k = 0; k < items.size(); ++k) {
    const auto item = items[k];
    if (item >= signals.item_count()) throw std::domain_error("encode_prior: item outside signal buffer");
    double w = power_or_one(side == Side::positive ? signals.rarity[item] : signals.popularity[item], lambda.signal);
    if (lambda.quality != 0.0 && signals.quality[item]) {
      const double q = *signals.quality[item];
      w *= power_or_one(side == Side::positive ? q : 1.0 - q, lambda.quality);
    }
    if (!hardness.empty()) w *= power_or_one(hardness[k], lambda.hardness);
    prior[k] = std::max(w, kPriorFloor);
  }
  return prior;
}

PriorPair encode_prior(const sampling::EnrichedInteraction& bag, const data::SignalBuffer& signals,
                       std::span<const double> pos_scores, std::span<const double> neg_scores,
                       const InferenceConfig& cfg) {
  return PriorPair{encode_side_prior(bag.positives, signals, pos_scores, Side::positive, cfg),
                   encode_side_prior(bag.negatives, signals, neg_scores, Side::negative, cfg)};
}

SimplexVector posterior_positive(std::span<const double> scores, std::span<const double> prior, double c_pos) {
  if (!(c_pos > 0.0)) throw std::domain_error("posterior_positive: c_pos must be positive");
  check_prior(scores, prior);
  std::vector<double> logits(scores.size());
  for (std::size_t k = 0; k < scores.size(); ++k) logits[k] = std::log(prior[k]) + scores[k] / c_pos;
  return math::stable_softmax(logits);
}

SimplexVector posterior_negative(std::span<const double> scores, std::span<const double> prior, double c_neg) {
  if (!(c_neg > 0.0)) throw std::domain_error("posterior_negative: c_neg must be positive");
  check_prior(scores, prior);
  std::vector<double> logits(scores.size());
  for (std::size_t k = 0; k < scores.size(); ++k) logits[k] = std::log(prior[k]) - scores[k] / c_neg;
  return math::stable_softmax(logits);
}

PosteriorPair solve_posteriors(std::span<const double> pos_scores, std::span<const double> neg_scores,
                               const PriorPair& prior, const InferenceConfig& cfg) {
  return PosteriorPair{posterior_positive(pos_scores, prior.pos, cfg.c_pos),
                       posterior_negative(neg_scores, prior.neg, cfg.c_neg)};
}

double positive_objective(std::span<const double> alpha, std::span<const double> scores,
                          std::span<const double> prior, double c_pos) {
  double alignment = 0.0;
  for (std::size_t k = 0; k < alpha.size(); ++k) alignment += alpha[k] * scores[k];
  return alignment - c_pos * kl_to_prior(alpha, prior);
}

double negative_objective(std::span<const double> beta, std::span<const double> scores,
                          std::span<const double> prior, double c_neg) {
  double alignment = 0.0;
  for (std::size_t k = 0; k < beta.size(); ++k) alignment -= beta[k] * scores[k];
  return alignment - c_neg * kl_to_prior(beta, prior);
}

Vector weighted_center(std::span<const RowView> rows, const SimplexVector& weights) {
  if (rows.size() != weights.size()) throw std::domain_error("interest_centers: bag/posterior size mismatch");
  if (rows.empty()) return {};
  const std::size_t dim = rows.front().size();
  Vector center(dim, 0.0);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].size() != dim) throw std::domain_error("interest_centers: dimension mismatch");
    const double w = weights[k];
    for (std::size_t d = 0; d < dim; ++d) center[d] += w * rows[k][d];
  }
  return center;
}

std::pair<Vector, Vector> interest_centers(std::span<const RowView> positives, std::span<const RowView> negatives,
                                           const PosteriorPair& post) {
  return {weighted_center(positives, post.alpha), weighted_center(negatives, post.beta)};
}

}  // namespace varbpr::inference
