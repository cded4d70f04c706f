#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "varbpr/random.hpp"

namespace varbpr::cli {

void write_synthetic_ratings(const SynthSpec& spec, const std::filesystem::path& path) {
  if (spec.users == 0 || spec.items == 0) throw std::domain_error("synth: empty catalog");
  if (spec.ratings < spec.users * spec.min_per_user) throw std::domain_error("synth: too few ratings for min_per_user");
  if (spec.ratings > spec.users * (spec.items / 2)) throw std::domain_error("synth: ratings exceed half the matrix");

  Rng rng(spec.seed);
  const std::size_t dim = spec.latent_dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  std::vector<double> user_f(spec.users * dim), item_f(spec.items * dim), quality(spec.items);
  for (double& v : user_f) v = standard_normal(rng);
  for (double& v : item_f) v = standard_normal(rng);
  for (double& v : quality) v = 0.5 * standard_normal(rng);

  // Zipf popularity over a random item order.
  std::vector<std::size_t> order(spec.items);
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(std::span<std::size_t>(order), rng);
  std::vector<double> log_pop(spec.items);
  for (std::size_t r = 0; r < spec.items; ++r) log_pop[order[r]] = -1.0 * std::log(static_cast<double>(r) + 1.0);

  // Heavy-tailed activity, rescaled to hit the rating budget exactly.
  std::vector<double> activity(spec.users);
  for (double& a : activity) a = std::exp(1.1 * standard_normal(rng));
  const double total_activity = std::accumulate(activity.begin(), activity.end(), 0.0);
  const std::size_t cap = spec.items / 2;
  const std::size_t extra = spec.ratings - spec.users * spec.min_per_user;
  std::vector<std::size_t> counts(spec.users);
  std::size_t assigned = 0;
  for (std::size_t u = 0; u < spec.users; ++u) {
    counts[u] = std::min(cap, spec.min_per_user + static_cast<std::size_t>(extra * activity[u] / total_activity));
    assigned += counts[u];
  }
  while (assigned < spec.ratings) {
    const auto u = static_cast<std::size_t>(uniform_index(rng, spec.users));
    if (counts[u] < cap) {
      ++counts[u];
      ++assigned;
    }
  }

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  std::int64_t clock = 874724710;
  std::vector<std::pair<double, std::size_t>> keys(spec.items);
  for (std::size_t u = 0; u < spec.users; ++u) {
    const double* uf = user_f.data() + u * dim;
    std::vector<double> affinity(spec.items);
    for (std::size_t i = 0; i < spec.items; ++i) {
      const double* vf = item_f.data() + i * dim;
      double a = 0.0;
      for (std::size_t d = 0; d < dim; ++d) a += uf[d] * vf[d];
      affinity[i] = a * scale;
      // Gumbel top-k draws items without replacement with weight pop * exp(1.5 * affinity).
      double g = uniform_unit(rng);
      while (g <= 0.0) g = uniform_unit(rng);
      keys[i] = {log_pop[i] + 1.5 * affinity[i] - std::log(-std::log(g)), i};
    }
    std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(counts[u]), keys.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; k < counts[u]; ++k) {
      const std::size_t i = keys[k].second;
      const double latent = 3.4 + 0.9 * affinity[i] + quality[i] + 0.7 * standard_normal(rng);
      const int rating = static_cast<int>(std::clamp(std::lround(latent), 1L, 5L));
      clock += 1 + static_cast<std::int64_t>(uniform_index(rng, 600));
      out << (u + 1) << '\t' << (i + 1) << '\t' << rating << '\t' << clock << '\n';
    }
  }
}

}  // namespace varbpr::cli
