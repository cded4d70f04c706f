#include "varbpr/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <utility>

#include "varbpr/mathcore.hpp"

namespace varbpr::eval {

namespace {

std::vector<double> user_scores(const EmbeddingModel& model, UserId u) {
  std::vector<double> scores(model.item_count());
  const auto user = model.user_row(u);
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = math::dot(user, model.item_row(static_cast<ItemId>(i)));
  return scores;
}

std::vector<ItemId> top_k_for_user(const EmbeddingModel& model, const data::SplitBundle& bundle, UserId u,
                                   std::size_t K) {
  const auto scores = user_scores(model, u);
  const auto& train = bundle.train_positives[u];
  std::vector<ItemId> candidates;
  candidates.reserve(scores.size() - train.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::binary_search(train.begin(), train.end(), static_cast<ItemId>(i))) {
      candidates.push_back(static_cast<ItemId>(i));
    }
  }
  const std::size_t k = std::min(K, candidates.size());
  auto better = [&](ItemId a, ItemId b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); };
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k), candidates.end(), better);
  candidates.resize(k);
  return candidates;
}

double mean_of(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double total = 0.0;
  for (double v : values) total += v;
  return total / static_cast<double>(values.size());
}

// Position of `item` within the complement of a sorted positive list.
std::size_t complement_index(const std::vector<ItemId>& positives, ItemId item) {
  const auto below = std::lower_bound(positives.begin(), positives.end(), item) - positives.begin();
  return item - static_cast<std::size_t>(below);
}

double kl_floor_pooled(std::vector<double>& pooled, std::span<const double> prior) {
  for (double& p : pooled) p += kPooledFloor;
  const auto p = math::SimplexVector::normalized(pooled);
  const auto q = math::SimplexVector::normalized(prior);
  return math::kl_divergence(p, q);
}

}  // namespace

std::size_t eval_threads_from_env() {
  const char* raw = std::getenv(kThreadsEnv);
  if (raw == nullptr || *raw == '\0') return 1;
  char* end = nullptr;
  const long value = std::strtol(raw, &end, 10);
  if (end == raw || *end != '\0' || value < 1) return 1;
  return static_cast<std::size_t>(value);
}

RankedLists rank_topk(const EmbeddingModel& model, const data::SplitBundle& bundle, std::size_t K,
                      std::size_t threads) {
  if (K < 1) throw std::domain_error("rank_topk: K must be >= 1");
  RankedLists lists(bundle.user_count);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t u = begin; u < end; ++u) {
      if (bundle.train_positives[u].empty()) continue;
      lists[u] = top_k_for_user(model, bundle, static_cast<UserId>(u), K);
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, bundle.user_count));
  if (threads == 1) {
    work(0, bundle.user_count);
    return lists;
  }
  {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (bundle.user_count + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(bundle.user_count, begin + chunk);
      if (begin < end) pool.emplace_back(work, begin, end);
    }
  }
  return lists;
}

double recall_at_k(const RankedLists& lists, const std::vector<std::vector<ItemId>>& test_positives) {
  std::vector<double> per_user;
  for (std::size_t u = 0; u < test_positives.size() && u < lists.size(); ++u) {
    const auto& test = test_positives[u];
    if (test.empty()) continue;
    std::size_t hits = 0;
    for (ItemId i : lists[u]) hits += std::binary_search(test.begin(), test.end(), i) ? 1 : 0;
    per_user.push_back(static_cast<double>(hits) / static_cast<double>(test.size()));
  }
  return mean_of(per_user);
}

double ndcg_at_k(const RankedLists& lists, const std::vector<std::vector<ItemId>>& test_positives, std::size_t K) {
  std::vector<double> per_user;
  for (std::size_t u = 0; u < test_positives.size() && u < lists.size(); ++u) {
    const auto& test = test_positives[u];
    if (test.empty()) continue;
    double dcg = 0.0;
    for (std::size_t r = 0; r < lists[u].size() && r < K; ++r) {
      if (std::binary_search(test.begin(), test.end(), lists[u][r])) dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    }
    double idcg = 0.0;
    for (std::size_t r = 0; r < std::min(test.size(), K); ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    per_user.push_back(dcg / idcg);
  }
  return mean_of(per_user);
}

double aplt_at_k(const RankedLists& lists, const data::SignalBuffer& signals, std::size_t K) {
  if (K < 1) throw std::domain_error("aplt_at_k: K must be >= 1");
  std::vector<double> per_user;
  for (const auto& list : lists) {
    if (list.empty()) continue;
    std::size_t tail = 0;
    for (std::size_t r = 0; r < list.size() && r < K; ++r) tail += signals.long_tail_mask.at(list[r]) ? 1 : 0;
    per_user.push_back(static_cast<double>(tail) / static_cast<double>(K));
  }
  return mean_of(per_user);
}

LikelihoodEstimate likelihood_probe(const EmbeddingModel& model, const data::SplitBundle& bundle,
                                    std::size_t negatives_per_positive, Rng& rng) {
  if (negatives_per_positive < 1) throw std::domain_error("likelihood_probe: need at least one negative");
  LikelihoodEstimate estimate;
  double sig_sum = 0.0;
  double log_sum = 0.0;
  for (std::size_t u = 0; u < bundle.user_count; ++u) {
    const auto& test = bundle.test_positives[u];
    if (test.empty()) continue;
    const auto& train = bundle.train_positives[u];
    if (train.size() + test.size() >= bundle.item_count) continue;
    const auto user = model.user_row(static_cast<UserId>(u));
    for (ItemId i : test) {
      const double s_pos = math::dot(user, model.item_row(i));
      for (std::size_t k = 0; k < negatives_per_positive; ++k) {
        ItemId j = 0;
        do {
          j = static_cast<ItemId>(uniform_index(rng, bundle.item_count));
        } while (std::binary_search(train.begin(), train.end(), j) || std::binary_search(test.begin(), test.end(), j));
        const double margin = s_pos - math::dot(user, model.item_row(j));
        sig_sum += math::sigmoid(margin);
        log_sum += math::log_sigmoid(margin);
        ++estimate.triplets;
      }
    }
  }
  if (estimate.triplets == 0) throw std::domain_error("likelihood_probe: no test positives");
  estimate.sigmoid_mean = sig_sum / static_cast<double>(estimate.triplets);
  estimate.log_mean = log_sum / static_cast<double>(estimate.triplets);
  return estimate;
}

JensenBag jensen_gap(std::span<const double> pos_scores, std::span<const double> neg_scores,
                     const inference::PosteriorPair& post) {
  if (pos_scores.size() != post.alpha.size() || neg_scores.size() != post.beta.size()) {
    throw std::domain_error("jensen_gap: bag/posterior size mismatch");
  }
  double pos_mean = 0.0, neg_mean = 0.0;
  for (std::size_t m = 0; m < pos_scores.size(); ++m) pos_mean += post.alpha[m] * pos_scores[m];
  for (std::size_t n = 0; n < neg_scores.size(); ++n) neg_mean += post.beta[n] * neg_scores[n];
  double pos_var = 0.0, neg_var = 0.0;
  for (std::size_t m = 0; m < pos_scores.size(); ++m) pos_var += post.alpha[m] * (pos_scores[m] - pos_mean) * (pos_scores[m] - pos_mean);
  for (std::size_t n = 0; n < neg_scores.size(); ++n) neg_var += post.beta[n] * (neg_scores[n] - neg_mean) * (neg_scores[n] - neg_mean);

  double expected_log = 0.0;
  for (std::size_t m = 0; m < pos_scores.size(); ++m) {
    for (std::size_t n = 0; n < neg_scores.size(); ++n) {
      expected_log += post.alpha[m] * post.beta[n] * math::log_sigmoid(pos_scores[m] - neg_scores[n]);
    }
  }
  return JensenBag{math::log_sigmoid(pos_mean - neg_mean) - expected_log, pos_var + neg_var};
}

JensenSummary jensen_gap_probe(const EmbeddingModel& model, std::span<const sampling::EnrichedInteraction> bags,
                               const data::SignalBuffer& signals, const inference::InferenceConfig& cfg) {
  JensenSummary summary;
  summary.bags.reserve(bags.size());
  for (const auto& bag : bags) {
    const auto inferred = learning::infer_bag(model, bag, signals, cfg);
    summary.bags.push_back(jensen_gap(inferred.pos_scores, inferred.neg_scores, inferred.post));
  }
  if (summary.bags.empty()) return summary;

  std::vector<double> gaps;
  gaps.reserve(summary.bags.size());
  double gap_sum = 0.0, var_sum = 0.0;
  summary.max_gap = summary.bags.front().gap;
  for (const auto& b : summary.bags) {
    gaps.push_back(b.gap);
    gap_sum += b.gap;
    var_sum += b.variance;
    summary.max_gap = std::max(summary.max_gap, b.gap);
    if (!b.within_bound()) ++summary.violations;
  }
  const double n = static_cast<double>(summary.bags.size());
  summary.mean_gap = gap_sum / n;
  summary.mean_variance = var_sum / n;
  std::sort(gaps.begin(), gaps.end());
  const std::size_t mid = gaps.size() / 2;
  summary.median_gap = gaps.size() % 2 == 1 ? gaps[mid] : 0.5 * (gaps[mid - 1] + gaps[mid]);
  return summary;
}

Compliance kl_compliance(const EmbeddingModel& model, const data::SplitBundle& bundle,
                         const data::SignalBuffer& signals, const inference::InferenceConfig& cfg,
                         std::span<const sampling::EnrichedInteraction> bags, ComplianceScope scope) {
  Compliance result;
  if (bags.empty()) return result;

  if (scope == ComplianceScope::bag) {
    for (const auto& bag : bags) {
      const auto inferred = learning::infer_bag(model, bag, signals, cfg);
      result.pos += math::kl_divergence(inferred.post.alpha, math::SimplexVector::normalized(inferred.prior.pos));
      result.neg += math::kl_divergence(inferred.post.beta, math::SimplexVector::normalized(inferred.prior.neg));
    }
    result.pos /= static_cast<double>(bags.size());
    result.neg /= static_cast<double>(bags.size());
    return result;
  }

  // Pool posterior mass per user over I_u+ and I_u-.
  std::vector<std::vector<double>> pooled_pos(bundle.user_count), pooled_neg(bundle.user_count);
  for (const auto& bag : bags) {
    const UserId u = bag.user;
    const auto& train = bundle.train_positives[u];
    if (pooled_pos[u].empty()) {
      pooled_pos[u].assign(train.size(), 0.0);
      pooled_neg[u].assign(bundle.item_count - train.size(), 0.0);
    }
    const auto inferred = learning::infer_bag(model, bag, signals, cfg);
    for (std::size_t m = 0; m < bag.M(); ++m) {
      const auto pos = std::lower_bound(train.begin(), train.end(), bag.positives[m]) - train.begin();
      pooled_pos[u][static_cast<std::size_t>(pos)] += inferred.post.alpha[m];
    }
    for (std::size_t n = 0; n < bag.N(); ++n) {
      pooled_neg[u][complement_index(train, bag.negatives[n])] += inferred.post.beta[n];
    }
  }

  std::size_t users = 0;
  for (std::size_t u = 0; u < bundle.user_count; ++u) {
    if (pooled_pos[u].empty()) continue;
    const auto& train = bundle.train_positives[u];
    const auto all_scores = user_scores(model, static_cast<UserId>(u));

    std::vector<double> pos_scores;
    pos_scores.reserve(train.size());
    for (ItemId i : train) pos_scores.push_back(all_scores[i]);
    std::vector<ItemId> negatives;
    std::vector<double> neg_scores;
    negatives.reserve(bundle.item_count - train.size());
    for (std::size_t i = 0; i < bundle.item_count; ++i) {
      if (!std::binary_search(train.begin(), train.end(), static_cast<ItemId>(i))) {
        negatives.push_back(static_cast<ItemId>(i));
        neg_scores.push_back(all_scores[i]);
      }
    }
    const auto prior_pos = inference::encode_side_prior(train, signals, pos_scores, inference::Side::positive, cfg);
    const auto prior_neg = inference::encode_side_prior(negatives, signals, neg_scores, inference::Side::negative, cfg);
    result.pos += kl_floor_pooled(pooled_pos[u], prior_pos);
    result.neg += kl_floor_pooled(pooled_neg[u], prior_neg);
    ++users;
  }
  if (users > 0) {
    result.pos /= static_cast<double>(users);
    result.neg /= static_cast<double>(users);
  }
  return result;
}

std::string diagnostics_csv_header() {
  return "epoch,loss,recall_at_k,ndcg_at_k,aplt_at_k,likelihood,log_likelihood,jensen_gap_mean,jensen_gap_max,"
         "margin_var_mean,kl_bag_pos,kl_bag_neg,kl_global_pos,kl_global_neg";
}

std::string to_csv(const DiagnosticsRow& row) {
  char buffer[512];
  std::snprintf(buffer, sizeof(buffer), "%zu,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g",
                row.epoch, row.loss, row.recall_k, row.ndcg_k, row.aplt_k, row.likelihood, row.log_likelihood,
                row.jensen_gap_mean, row.jensen_gap_max, row.margin_var_mean, row.kl_bag_pos, row.kl_bag_neg,
                row.kl_global_pos, row.kl_global_neg);
  return buffer;
}

}  // namespace varbpr::eval
