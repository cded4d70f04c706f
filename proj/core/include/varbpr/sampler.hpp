#pragma once

#include <cstddef>
#include <vector>

#include "varbpr/dataio.hpp"
#include "varbpr/random.hpp"

namespace varbpr::sampling {

using data::ItemId;
using data::UserId;

/// One training unit (u, i_1..i_M, j_1..j_N).
struct EnrichedInteraction {
  UserId user = 0;
  std::vector<ItemId> positives;
  std::vector<ItemId> negatives;

  std::size_t M() const noexcept { return positives.size(); }
  std::size_t N() const noexcept { return negatives.size(); }
};

struct ScheduledBag {
  UserId user = 0;
  ItemId anchor = 0;
};

/// Draws a bag with uniformly sampled positives: without replacement when the
/// user has at least M positives, with replacement otherwise. Negatives are
/// distinct items outside the user's training positives.
EnrichedInteraction sample_bag(UserId user, const data::SplitBundle& bundle, std::size_t M, std::size_t N, Rng& rng);

/// As sample_bag, with `anchor` pinned in slot i_1 and the other M-1
/// positives drawn from the rest of the user's positives.
EnrichedInteraction sample_anchored_bag(const ScheduledBag& slot, const data::SplitBundle& bundle, std::size_t M,
                                        std::size_t N, Rng& rng);

/// Uniform negatives for `user`, without replacement.
std::vector<ItemId> sample_negatives(UserId user, const data::SplitBundle& bundle, std::size_t N, Rng& rng);

/// Every training positive once, shuffled.
std::vector<ScheduledBag> epoch_schedule(const data::SplitBundle& bundle, Rng& rng);

/// One epoch of anchored bags, materialized.
std::vector<EnrichedInteraction> epoch_bags(const data::SplitBundle& bundle, std::size_t M, std::size_t N, Rng& rng);

}  // namespace varbpr::sampling
