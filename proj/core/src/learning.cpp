#include "varbpr/learning.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "varbpr/mathcore.hpp"

namespace varbpr::learning {

namespace {

void axpy(double a, RowView x, Vector& y) {
  for (std::size_t d = 0; d < y.size(); ++d) y[d] += a * x[d];
}

Vector scaled(double a, RowView x) {
  Vector out(x.size());
  for (std::size_t d = 0; d < x.size(); ++d) out[d] = a * x[d];
  return out;
}

void add_decay(Vector& grad, RowView param, double l2) {
  if (l2 == 0.0) return;
  for (std::size_t d = 0; d < grad.size(); ++d) grad[d] += 2.0 * l2 * param[d];
}

double squared_norm(RowView x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

void check_bag(RowView user, std::span<const RowView> positives, std::span<const RowView> negatives,
               const inference::PosteriorPair& post) {
  if (positives.size() != post.alpha.size() || negatives.size() != post.beta.size()) {
    throw std::domain_error("bag/posterior size mismatch");
  }
  for (auto row : positives) {
    if (row.size() != user.size()) throw std::domain_error("embedding dimension mismatch");
  }
  for (auto row : negatives) {
    if (row.size() != user.size()) throw std::domain_error("embedding dimension mismatch");
  }
}

}  // namespace

LossKind parse_loss_kind(std::string_view name) {
  if (name == "bpr") return LossKind::bpr;
  if (name == "varbpr") return LossKind::varbpr;
  if (name == "varbpr_elbo") return LossKind::varbpr_elbo;
  throw std::invalid_argument("unknown loss kind '" + std::string(name) + "'");
}

std::string_view loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::bpr: return "bpr";
    case LossKind::varbpr: return "varbpr";
    case LossKind::varbpr_elbo: return "varbpr_elbo";
  }
  return "unknown";
}

PosteriorMode parse_posterior_mode(std::string_view name) {
  if (name == "closed_form") return PosteriorMode::closed_form;
  if (name == "uniform") return PosteriorMode::uniform;
  throw std::invalid_argument("unknown posterior mode '" + std::string(name) + "'");
}

std::string_view posterior_mode_name(PosteriorMode mode) {
  return mode == PosteriorMode::closed_form ? "closed_form" : "uniform";
}

EmbeddingModel::EmbeddingModel(std::size_t users, std::size_t items, std::size_t dim)
    : users_(users), items_(items), dim_(dim), user_factors_(users * dim, 0.0), item_factors_(items * dim, 0.0) {
  if (dim == 0) throw std::domain_error("embedding dimension must be >= 1");
}

EmbeddingModel EmbeddingModel::random_normal(std::size_t users, std::size_t items, std::size_t dim, double stddev,
                                             Rng& rng) {
  EmbeddingModel model(users, items, dim);
  for (double& v : model.user_factors_) v = stddev * standard_normal(rng);
  for (double& v : model.item_factors_) v = stddev * standard_normal(rng);
  return model;
}

double EmbeddingModel::score(UserId u, ItemId i) const {
  if (u >= users_ || i >= items_) throw std::domain_error("score: id out of range");
  return math::dot(user_row(u), item_row(i));
}

bool EmbeddingModel::all_finite() const noexcept {
  auto finite = [](double v) { return std::isfinite(v); };
  return std::all_of(user_factors_.begin(), user_factors_.end(), finite) &&
         std::all_of(item_factors_.begin(), item_factors_.end(), finite);
}

double bpr_loss(double margin) { return -math::log_sigmoid(margin); }

double varbpr_loss(RowView user, RowView c_plus, RowView c_minus) {
  return bpr_loss(math::dot(user, c_plus) - math::dot(user, c_minus));
}

double elbo_loss(RowView user, std::span<const RowView> positives, std::span<const RowView> negatives,
                 const inference::PosteriorPair& post) {
  check_bag(user, positives, negatives, post);
  std::vector<double> neg_scores(negatives.size());
  for (std::size_t n = 0; n < negatives.size(); ++n) neg_scores[n] = math::dot(user, negatives[n]);
  double loss = 0.0;
  for (std::size_t m = 0; m < positives.size(); ++m) {
    const double s = math::dot(user, positives[m]);
    for (std::size_t n = 0; n < negatives.size(); ++n) {
      loss -= post.alpha[m] * post.beta[n] * math::log_sigmoid(s - neg_scores[n]);
    }
  }
  return loss;
}

BagGradients bpr_gradients(RowView user, RowView positive, RowView negative, double l2) {
  if (positive.size() != user.size() || negative.size() != user.size()) {
    throw std::domain_error("embedding dimension mismatch");
  }
  const double margin = math::dot(user, positive) - math::dot(user, negative);
  const double g = math::sigmoid(-margin);
  BagGradients grads;
  grads.user.resize(user.size());
  for (std::size_t d = 0; d < user.size(); ++d) grads.user[d] = -g * (positive[d] - negative[d]);
  grads.positives.push_back(scaled(-g * 1.0, user));
  grads.negatives.push_back(scaled(g * 1.0, user));
  add_decay(grads.user, user, l2);
  add_decay(grads.positives[0], positive, l2);
  add_decay(grads.negatives[0], negative, l2);
  return grads;
}

BagGradients varbpr_gradients(RowView user, std::span<const RowView> positives, std::span<const RowView> negatives,
                              const inference::PosteriorPair& post, double l2) {
  check_bag(user, positives, negatives, post);
  const auto [c_plus, c_minus] = inference::interest_centers(positives, negatives, post);
  const double margin = math::dot(user, c_plus) - math::dot(user, c_minus);
  const double g = math::sigmoid(-margin);

  BagGradients grads;
  grads.user.resize(user.size());
  for (std::size_t d = 0; d < user.size(); ++d) grads.user[d] = -g * (c_plus[d] - c_minus[d]);
  add_decay(grads.user, user, l2);
  for (std::size_t m = 0; m < positives.size(); ++m) {
    grads.positives.push_back(scaled(-g * post.alpha[m], user));
    add_decay(grads.positives.back(), positives[m], l2);
  }
  for (std::size_t n = 0; n < negatives.size(); ++n) {
    grads.negatives.push_back(scaled(g * post.beta[n], user));
    add_decay(grads.negatives.back(), negatives[n], l2);
  }
  return grads;
}

BagGradients elbo_gradients(RowView user, std::span<const RowView> positives, std::span<const RowView> negatives,
                            const inference::PosteriorPair& post, double l2) {
  check_bag(user, positives, negatives, post);
  const std::size_t M = positives.size();
  const std::size_t N = negatives.size();
  std::vector<double> pos_scores(M), neg_scores(N);
  for (std::size_t m = 0; m < M; ++m) pos_scores[m] = math::dot(user, positives[m]);
  for (std::size_t n = 0; n < N; ++n) neg_scores[n] = math::dot(user, negatives[n]);

  // w_mn = alpha_m beta_n sigma(-gamma_mn); dL/dgamma_mn = -w_mn.
  std::vector<double> pos_weight(M, 0.0), neg_weight(N, 0.0);
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t n = 0; n < N; ++n) {
      const double w = post.alpha[m] * post.beta[n] * math::sigmoid(neg_scores[n] - pos_scores[m]);
      pos_weight[m] += w;
      neg_weight[n] += w;
    }
  }

  BagGradients grads;
  grads.user.assign(user.size(), 0.0);
  for (std::size_t m = 0; m < M; ++m) axpy(-pos_weight[m], positives[m], grads.user);
  for (std::size_t n = 0; n < N; ++n) axpy(neg_weight[n], negatives[n], grads.user);
  add_decay(grads.user, user, l2);
  for (std::size_t m = 0; m < M; ++m) {
    grads.positives.push_back(scaled(-pos_weight[m], user));
    add_decay(grads.positives.back(), positives[m], l2);
  }
  for (std::size_t n = 0; n < N; ++n) {
    grads.negatives.push_back(scaled(neg_weight[n], user));
    add_decay(grads.negatives.back(), negatives[n], l2);
  }
  return grads;
}

BagInference infer_bag(const EmbeddingModel& model, const sampling::EnrichedInteraction& bag,
                       const data::SignalBuffer& signals, const inference::InferenceConfig& cfg, PosteriorMode mode) {
  const RowView user = model.user_row(bag.user);
  std::vector<double> pos_scores(bag.M()), neg_scores(bag.N());
  for (std::size_t m = 0; m < bag.M(); ++m) pos_scores[m] = math::dot(user, model.item_row(bag.positives[m]));
  for (std::size_t n = 0; n < bag.N(); ++n) neg_scores[n] = math::dot(user, model.item_row(bag.negatives[n]));

  if (mode == PosteriorMode::uniform) {
    inference::PriorPair flat{std::vector<double>(bag.M(), 1.0), std::vector<double>(bag.N(), 1.0)};
    return BagInference{std::move(pos_scores), std::move(neg_scores), std::move(flat),
                        inference::PosteriorPair{math::SimplexVector::uniform(bag.M()),
                                                 math::SimplexVector::uniform(bag.N())}};
  }
  auto prior = inference::encode_prior(bag, signals, pos_scores, neg_scores, cfg);
  auto post = inference::solve_posteriors(pos_scores, neg_scores, prior, cfg);
  return BagInference{std::move(pos_scores), std::move(neg_scores), std::move(prior), std::move(post)};
}

void TrainConfig::validate() const {
  if (dim < 1) throw std::domain_error("d must be >= 1");
  if (epochs < 1) throw std::domain_error("epochs must be >= 1");
  if (M < 1 || N < 1) throw std::domain_error("M and N must be >= 1");
  if (batch_size < 1) throw std::domain_error("batch_size must be >= 1");
  if (!(lr > 0.0)) throw std::domain_error("lr must be positive");
  if (!(l2 >= 0.0)) throw std::domain_error("l2 must be non-negative");
  if (!(init_std > 0.0)) throw std::domain_error("init_std must be positive");
  inference.validate();
}

NumericError::NumericError(std::size_t epoch, std::size_t bag, double user_norm, double max_item_norm)
    : std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) + ", bag " + std::to_string(bag) +
                         " (user norm " + std::to_string(user_norm) + ", max item norm " +
                         std::to_string(max_item_norm) + ")"),
      epoch(epoch),
      bag(bag),
      user_norm(user_norm),
      max_item_norm(max_item_norm) {}

Trainer::Trainer(TrainConfig config, const data::SplitBundle& bundle, const data::SignalBuffer& signals)
    : config_(std::move(config)),
      bundle_(bundle),
      signals_(signals),
      model_(1, 1, 1),
      sample_rng_(derive_seed(config_.seed, 1)) {
  config_.validate();
  if (signals.item_count() != bundle.item_count) throw std::domain_error("signal buffer does not match bundle");
  Rng init_rng(derive_seed(config_.seed, 0));
  model_ = EmbeddingModel::random_normal(bundle.user_count, bundle.item_count, config_.dim, config_.init_std, init_rng);
  optimizer_.tensors.emplace_back(bundle.user_count, config_.dim);
  optimizer_.tensors.emplace_back(bundle.item_count, config_.dim);
  user_grad_.assign(model_.user_factors().size(), 0.0);
  item_grad_.assign(model_.item_factors().size(), 0.0);
  user_touched_.assign(bundle.user_count, 0);
  item_touched_.assign(bundle.item_count, 0);
}

double Trainer::accumulate_bag(const sampling::EnrichedInteraction& bag) {
  const RowView user = model_.user_row(bag.user);
  std::vector<RowView> pos_rows, neg_rows;
  pos_rows.reserve(bag.M());
  neg_rows.reserve(bag.N());
  for (ItemId i : bag.positives) pos_rows.push_back(model_.item_row(i));
  for (ItemId j : bag.negatives) neg_rows.push_back(model_.item_row(j));

  double loss = 0.0;
  BagGradients grads;
  switch (config_.loss) {
    case LossKind::bpr: {
      loss = bpr_loss(math::dot(user, pos_rows[0]) - math::dot(user, neg_rows[0]));
      grads = bpr_gradients(user, pos_rows[0], neg_rows[0], config_.l2);
      break;
    }
    case LossKind::varbpr: {
      const auto inferred = infer_bag(model_, bag, signals_, config_.inference, config_.posterior);
      const auto [c_plus, c_minus] = inference::interest_centers(pos_rows, neg_rows, inferred.post);
      loss = varbpr_loss(user, c_plus, c_minus);
      grads = varbpr_gradients(user, pos_rows, neg_rows, inferred.post, config_.l2);
      break;
    }
    case LossKind::varbpr_elbo: {
      const auto inferred = infer_bag(model_, bag, signals_, config_.inference, config_.posterior);
      loss = elbo_loss(user, pos_rows, neg_rows, inferred.post);
      grads = elbo_gradients(user, pos_rows, neg_rows, inferred.post, config_.l2);
      break;
    }
  }

  const std::size_t dim = config_.dim;
  auto add_row = [dim](std::vector<double>& buffer, std::vector<char>& touched, std::vector<std::size_t>& list,
                       std::size_t row, const Vector& g) {
    double* dst = buffer.data() + row * dim;
    for (std::size_t d = 0; d < dim; ++d) dst[d] += g[d];
    if (!touched[row]) {
      touched[row] = 1;
      list.push_back(row);
    }
  };
  add_row(user_grad_, user_touched_, touched_users_, bag.user, grads.user);
  for (std::size_t m = 0; m < bag.M(); ++m) add_row(item_grad_, item_touched_, touched_items_, bag.positives[m], grads.positives[m]);
  for (std::size_t n = 0; n < bag.N(); ++n) add_row(item_grad_, item_touched_, touched_items_, bag.negatives[n], grads.negatives[n]);
  return loss;
}

void Trainer::apply_batch() {
  if (touched_users_.empty() && touched_items_.empty()) return;
  // Row order does not affect the result; sorting keeps memory access monotone.
  std::sort(touched_users_.begin(), touched_users_.end());
  std::sort(touched_items_.begin(), touched_items_.end());
  const SparseUpdate updates[] = {
      {0, model_.user_factors(), user_grad_, touched_users_},
      {1, model_.item_factors(), item_grad_, touched_items_},
  };
  adam_step(optimizer_, updates, config_.lr);

  const std::size_t dim = config_.dim;
  for (std::size_t row : touched_users_) {
    std::fill_n(user_grad_.begin() + static_cast<std::ptrdiff_t>(row * dim), dim, 0.0);
    user_touched_[row] = 0;
  }
  for (std::size_t row : touched_items_) {
    std::fill_n(item_grad_.begin() + static_cast<std::ptrdiff_t>(row * dim), dim, 0.0);
    item_touched_[row] = 0;
  }
  touched_users_.clear();
  touched_items_.clear();
}

EpochStats Trainer::run_epoch() {
  const auto start = std::chrono::steady_clock::now();
  ++epoch_;
  const auto schedule = sampling::epoch_schedule(bundle_, sample_rng_);
  const std::size_t M = config_.effective_M();
  const std::size_t N = config_.effective_N();

  double loss_sum = 0.0;
  std::size_t in_batch = 0;
  for (std::size_t b = 0; b < schedule.size(); ++b) {
    const auto bag = sampling::sample_anchored_bag(schedule[b], bundle_, M, N, sample_rng_);
    double loss = NAN;
    try {
      loss = accumulate_bag(bag);
    } catch (const std::domain_error&) {
      // log_sigmoid and softmax reject non-finite scores; report it as divergence.
    }
    if (!std::isfinite(loss)) {
      double max_item = 0.0;
      for (std::size_t i = 0; i < model_.item_count(); ++i) {
        max_item = std::max(max_item, squared_norm(model_.item_row(static_cast<ItemId>(i))));
      }
      throw NumericError(epoch_, b, std::sqrt(squared_norm(model_.user_row(bag.user))), std::sqrt(max_item));
    }
    loss_sum += loss;
    if (++in_batch == config_.batch_size) {
      apply_batch();
      in_batch = 0;
    }
  }
  apply_batch();
  if (!model_.all_finite()) throw NumericError(epoch_, schedule.size(), NAN, NAN);

  EpochStats stats;
  stats.epoch = epoch_;
  stats.bags = schedule.size();
  stats.mean_loss = schedule.empty() ? 0.0 : loss_sum / static_cast<double>(schedule.size());
  stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return stats;
}

TrainResult train(const TrainConfig& config, const data::SplitBundle& bundle, const data::SignalBuffer& signals,
                  const EpochCallback& on_epoch) {
  Trainer trainer(config, bundle, signals);
  std::vector<EpochStats> history;
  history.reserve(config.epochs);
  for (std::size_t e = 0; e < config.epochs; ++e) {
    history.push_back(trainer.run_epoch());
    if (on_epoch) on_epoch(history.back(), trainer.model());
  }
  return TrainResult{std::move(trainer.model()), std::move(history)};
}

}  // namespace varbpr::learning
