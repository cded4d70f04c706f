#include <benchmark/benchmark.h>

#include <algorithm>
#include <vector>

#include "varbpr/dataio.hpp"
#include "varbpr/inference.hpp"
#include "varbpr/learning.hpp"
#include "varbpr/random.hpp"
#include "varbpr/sampler.hpp"

namespace {

using namespace varbpr;

// Small random implicit dataset: 300 users x 600 items, ~30 positives each.
struct Fixture {
  data::SplitBundle bundle;
  data::SignalBuffer signals;

  Fixture() {
    Rng rng(11);
    bundle.user_count = 300;
    bundle.item_count = 600;
    bundle.train_positives.resize(bundle.user_count);
    bundle.test_positives.resize(bundle.user_count);
    for (auto& items : bundle.train_positives) {
      std::vector<char> seen(bundle.item_count, 0);
      while (items.size() < 30) {
        const auto i = static_cast<data::ItemId>(uniform_index(rng, bundle.item_count));
        if (!seen[i]) {
          seen[i] = 1;
          items.push_back(i);
        }
      }
      std::sort(items.begin(), items.end());
    }
    data::InteractionLog empty_log;
    signals = data::compute_signals(bundle, empty_log);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_PosteriorSolve(benchmark::State& state) {
  const auto size = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  std::vector<double> pos(size), neg(size), prior_pos(size, 1.0), prior_neg(size, 1.0);
  const inference::InferenceConfig cfg;
  for (auto& s : pos) s = standard_normal(rng);
  for (auto& s : neg) s = standard_normal(rng);
  for (auto _ : state) {
    auto post = inference::solve_posteriors(pos, neg, inference::PriorPair{prior_pos, prior_neg}, cfg);
    benchmark::DoNotOptimize(post);
  }
}
BENCHMARK(BM_PosteriorSolve)->Arg(2)->Arg(8)->Arg(32);

// One training epoch; the argument is the bag size M+N (split evenly).
void BM_Epoch(benchmark::State& state) {
  const auto& f = fixture();
  const auto size = static_cast<std::size_t>(state.range(0));
  learning::TrainConfig cfg;
  cfg.dim = 32;
  cfg.epochs = 1;
  if (size == 0) {
    cfg.loss = learning::LossKind::bpr;
  } else {
    cfg.M = size / 2;
    cfg.N = size - cfg.M;
  }
  learning::Trainer trainer(cfg, f.bundle, f.signals);
  for (auto _ : state) benchmark::DoNotOptimize(trainer.run_epoch());
  state.counters["bags"] = static_cast<double>(f.bundle.train_size());
}
BENCHMARK(BM_Epoch)->Arg(0)->Arg(2)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
