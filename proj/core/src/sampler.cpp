#include "varbpr/sampler.hpp"

#include <algorithm>
#include <stdexcept>

namespace varbpr::sampling {

namespace {

void check_sizes(const data::SplitBundle& bundle, UserId user, std::size_t M, std::size_t N) {
  if (M < 1 || N < 1) throw std::domain_error("bag sizes M and N must be >= 1");
  if (user >= bundle.user_count) throw std::domain_error("user id out of range");
  if (bundle.train_positives[user].empty()) throw std::domain_error("user has no training positives");
}

// Appends k draws from pool, skipping `excluded`. Draws are distinct when the
// pool holds at least k eligible values, otherwise with replacement.
void draw_positives(const std::vector<ItemId>& pool, std::size_t k, const ItemId* excluded, Rng& rng,
                    std::vector<ItemId>& out) {
  const std::size_t eligible = pool.size() - (excluded ? 1 : 0);
  const bool distinct = eligible >= k;
  const std::size_t first = out.size();
  while (out.size() - first < k) {
    const ItemId item = pool[uniform_index(rng, pool.size())];
    if (excluded && item == *excluded) continue;
    if (distinct && std::find(out.begin() + static_cast<std::ptrdiff_t>(first), out.end(), item) != out.end()) continue;
    out.push_back(item);
  }
}

}  // namespace

std::vector<ItemId> sample_negatives(UserId user, const data::SplitBundle& bundle, std::size_t N, Rng& rng) {
  const auto& positives = bundle.train_positives.at(user);
  if (N + positives.size() >= bundle.item_count) {
    throw std::domain_error("too few eligible negatives for requested N");
  }
  std::vector<ItemId> negatives;
  negatives.reserve(N);
  while (negatives.size() < N) {
    const auto item = static_cast<ItemId>(uniform_index(rng, bundle.item_count));
    if (std::binary_search(positives.begin(), positives.end(), item)) continue;
    if (std::find(negatives.begin(), negatives.end(), item) != negatives.end()) continue;
    negatives.push_back(item);
  }
  return negatives;
}

EnrichedInteraction sample_bag(UserId user, const data::SplitBundle& bundle, std::size_t M, std::size_t N, Rng& rng) {
  check_sizes(bundle, user, M, N);
  EnrichedInteraction bag;
  bag.user = user;
  bag.positives.reserve(M);
  draw_positives(bundle.train_positives[user], M, nullptr, rng, bag.positives);
  bag.negatives = sample_negatives(user, bundle, N, rng);
  return bag;
}

EnrichedInteraction sample_anchored_bag(const ScheduledBag& slot, const data::SplitBundle& bundle, std::size_t M,
                                        std::size_t N, Rng& rng) {
  check_sizes(bundle, slot.user, M, N);
  const auto& positives = bundle.train_positives[slot.user];
  EnrichedInteraction bag;
  bag.user = slot.user;
  bag.positives.reserve(M);
  bag.positives.push_back(slot.anchor);
  if (M > 1) {
    // Enough positives: the anchor is excluded and the rest are distinct.
    const ItemId* excluded = positives.size() >= M ? &slot.anchor : nullptr;
    draw_positives(positives, M - 1, excluded, rng, bag.positives);
  }
  bag.negatives = sample_negatives(slot.user, bundle, N, rng);
  return bag;
}

std::vector<ScheduledBag> epoch_schedule(const data::SplitBundle& bundle, Rng& rng) {
  std::vector<ScheduledBag> schedule;
  schedule.reserve(bundle.train_size());
  for (std::size_t u = 0; u < bundle.user_count; ++u) {
    for (ItemId i : bundle.train_positives[u]) schedule.push_back({static_cast<UserId>(u), i});
  }
  shuffle(std::span<ScheduledBag>(schedule), rng);
  return schedule;
}

std::vector<EnrichedInteraction> epoch_bags(const data::SplitBundle& bundle, std::size_t M, std::size_t N, Rng& rng) {
  const auto schedule = epoch_schedule(bundle, rng);
  std::vector<EnrichedInteraction> bags;
  bags.reserve(schedule.size());
  for (const auto& slot : schedule) bags.push_back(sample_anchored_bag(slot, bundle, M, N, rng));
  return bags;
}

}  // namespace varbpr::sampling
