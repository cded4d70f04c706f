// Acceptance suite: one line per criterion, exit status 0 only if every
// selected criterion passes.
//
//   varbpr_acceptance [--only 1,4,9] [--data path/to/ml-100k/u.data]
//
// Criteria 8-12 need the real MovieLens-100K ratings file. It is looked up in
// --data, then $VARBPR_ML100K, then <source>/data/ml-100k/u.data; when it is
// missing those criteria fail with a "dataset not found" message.

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "config.hpp"
#include "oracles.hpp"
#include "synth.hpp"
#include "temp_dir.hpp"
#include "varbpr/evaluation.hpp"
#include "varbpr/inference.hpp"
#include "varbpr/learning.hpp"
#include "varbpr/mathcore.hpp"
#include "varbpr/sampler.hpp"

namespace {

using namespace varbpr;
using cli::ExperimentConfig;
using cli::PreparedData;
using cli::RankingMetrics;
using inference::PosteriorPair;
using math::SimplexVector;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, pattern, a);
  return buf;
}

std::string join(const std::vector<double>& values, const char* pattern = "%.4f") {
  std::string out;
  for (std::size_t k = 0; k < values.size(); ++k) out += (k ? " " : "") + fmt(pattern, values[k]);
  return out;
}

bool non_increasing(const std::vector<double>& v) {
  for (std::size_t k = 1; k < v.size(); ++k)
    if (v[k] > v[k - 1]) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Shared data

class Context {
 public:
  explicit Context(std::optional<std::filesystem::path> data_arg) : data_arg_(std::move(data_arg)) {}

  /// Real ML-100K, or an explanation of why it is unavailable.
  const PreparedData* ml100k(std::string& why) {
    if (!ml_loaded_) {
      ml_loaded_ = true;
      ml_path_ = locate_ml100k();
      if (!ml_path_) {
        ml_error_ = "dataset not found (pass --data, set VARBPR_ML100K, or place data/ml-100k/u.data)";
      } else {
        auto cfg = base_config(*ml_path_);
        ml_ = cli::prepare_data(cfg);
        if (ml_->log.records.size() != 100000 || ml_->log.user_count() != 943 || ml_->log.item_count() != 1682) {
          ml_error_ = "file at " + ml_path_->string() + " is not MovieLens-100K (expected 100000 records, 943 users, 1682 items)";
          ml_.reset();
        }
      }
    }
    why = ml_error_;
    return ml_ ? &*ml_ : nullptr;
  }

  const std::filesystem::path& ml100k_path() const { return *ml_path_; }

  /// ML-100K when present, otherwise a synthetic log of the same shape.
  const PreparedData& timing_data(std::string& label, std::filesystem::path& path) {
    std::string why;
    if (const auto* real = ml100k(why)) {
      label = "ML-100K";
      path = *ml_path_;
      return *real;
    }
    if (!surrogate_) {
      surrogate_path_ = scratch_.path() / "surrogate_u.data";
      cli::write_synthetic_ratings(cli::SynthSpec{}, surrogate_path_);
      surrogate_ = cli::prepare_data(base_config(surrogate_path_));
    }
    label = "synthetic ML-100K-shaped log (real file not found)";
    path = surrogate_path_;
    return *surrogate_;
  }

  static ExperimentConfig base_config(const std::filesystem::path& path) {
    ExperimentConfig cfg;
    cfg.dataset.path = path;
    cfg.dataset.format = data::Format::ml100k_tab;
    cfg.dataset.split = cli::SplitKind::clean_test;
    cfg.eval.K = 20;
    cfg.eval.diagnostics = false;
    cfg.eval.eval_every = cfg.train.epochs;
    return cfg;
  }

  /// Final metrics for a config, memoized by its full echo.
  RankingMetrics final_metrics(const ExperimentConfig& cfg, const PreparedData& data) {
    const auto key = cli::config_echo_json(cfg);
    if (auto it = metrics_.find(key); it != metrics_.end()) return it->second;
    const auto m = cli::run_experiment(cfg, data, false).final_metrics;
    metrics_.emplace(key, m);
    return m;
  }

 private:
  std::optional<std::filesystem::path> locate_ml100k() const {
    std::vector<std::filesystem::path> candidates;
    if (data_arg_) candidates.push_back(*data_arg_);
    if (const char* env = std::getenv("VARBPR_ML100K"); env && *env) candidates.emplace_back(env);
    candidates.push_back(std::filesystem::path(VARBPR_SOURCE_DIR) / "data" / "ml-100k" / "u.data");
    for (auto p : candidates) {
      if (std::filesystem::is_directory(p)) p /= "u.data";
      if (std::filesystem::is_regular_file(p)) return p;
    }
    return std::nullopt;
  }

  std::optional<std::filesystem::path> data_arg_;
  bool ml_loaded_ = false;
  std::optional<std::filesystem::path> ml_path_;
  std::optional<PreparedData> ml_;
  std::string ml_error_;
  testing::TempDir scratch_;
  std::filesystem::path surrogate_path_;
  std::optional<PreparedData> surrogate_;
  std::map<std::string, RankingMetrics> metrics_;
};

// ---------------------------------------------------------------------------
// Property criteria

Outcome posterior_optimality(Context&) {
  Rng rng(1001);
  double worst_value = INFINITY;
  double worst_linf = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t M = 1 + uniform_index(rng, 6);
    const std::size_t N = 1 + uniform_index(rng, 6);
    const auto s = oracle::normals(rng, M, 2.0);
    const auto t = oracle::normals(rng, N, 2.0);
    const auto pp = oracle::dirichlet(rng, M);
    const auto pn = oracle::dirichlet(rng, N);
    const double c = std::exp(std::log(0.1) + std::log(1000.0) * uniform_unit(rng));

    const auto alpha = inference::posterior_positive(s, pp, c);
    const auto beta = inference::posterior_negative(t, pn, c);
    const std::vector<double> a(alpha.begin(), alpha.end());
    const std::vector<double> b(beta.begin(), beta.end());
    const auto grid_a = oracle::lattice_argmax(s, pp, c, 1.0, 1000);
    const auto grid_b = oracle::lattice_argmax(t, pn, c, -1.0, 1000);

    worst_value = std::min(worst_value, oracle::subproblem_objective(a, s, pp, c, 1.0) -
                                            oracle::subproblem_objective(grid_a, s, pp, c, 1.0));
    worst_value = std::min(worst_value, oracle::subproblem_objective(b, t, pn, c, -1.0) -
                                            oracle::subproblem_objective(grid_b, t, pn, c, -1.0));
    for (std::size_t k = 0; k < M; ++k) worst_linf = std::max(worst_linf, std::abs(a[k] - grid_a[k]));
    for (std::size_t k = 0; k < N; ++k) worst_linf = std::max(worst_linf, std::abs(b[k] - grid_b[k]));
  }
  return {worst_value >= -1e-6 && worst_linf <= 5e-3,
          "1000 instances; min(closed - grid) objective " + fmt("%.3g", worst_value) + " (>= -1e-6), max L-inf " +
              fmt("%.3g", worst_linf) + " (<= 5e-3)"};
}

Outcome elbo_identity(Context&) {
  Rng rng(1002);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t M = 1 + uniform_index(rng, 4);
    const std::size_t N = 1 + uniform_index(rng, 4);
    const std::size_t dim = 5;
    const auto user = oracle::normals(rng, dim, 1.0);
    std::vector<std::vector<double>> pos, neg;
    for (std::size_t m = 0; m < M; ++m) pos.push_back(oracle::normals(rng, dim, 1.0));
    for (std::size_t n = 0; n < N; ++n) neg.push_back(oracle::normals(rng, dim, 1.0));
    // Unnormalized priors on an arbitrary scale.
    auto pp = oracle::dirichlet(rng, M);
    auto pn = oracle::dirichlet(rng, N);
    for (auto& v : pp) v *= 7.5;
    for (auto& v : pn) v *= 0.3;

    std::vector<double> s(M), t(N);
    for (std::size_t m = 0; m < M; ++m) s[m] = math::dot(user, pos[m]);
    for (std::size_t n = 0; n < N; ++n) t[n] = math::dot(user, neg[n]);
    std::vector<std::vector<double>> gamma(M, std::vector<double>(N));
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t n = 0; n < N; ++n) gamma[m][n] = s[m] - t[n];

    // Closed-form q on even trials, an arbitrary q on odd ones: the identity holds for any q.
    PosteriorPair q = trial % 2 == 0
                          ? inference::solve_posteriors(s, t, {pp, pn}, inference::InferenceConfig{})
                          : PosteriorPair{SimplexVector(oracle::dirichlet(rng, M)), SimplexVector(oracle::dirichlet(rng, N))};

    const std::vector<inference::RowView> pv(pos.begin(), pos.end()), nv(neg.begin(), neg.end());
    const auto pbar_pos = SimplexVector::normalized(pp);
    const auto pbar_neg = SimplexVector::normalized(pn);
    const double elbo = -learning::elbo_loss(user, pv, nv, q) + math::entropy(q.alpha) -
                        math::cross_entropy(q.alpha, pbar_pos) + math::entropy(q.beta) -
                        math::cross_entropy(q.beta, pbar_neg);

    std::vector<double> joint_q;
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t n = 0; n < N; ++n) joint_q.push_back(q.alpha[m] * q.beta[n]);
    const double kl = math::kl_divergence(SimplexVector::normalized(joint_q),
                                          SimplexVector(oracle::exact_posterior(gamma, pp, pn)));
    const double log_evidence = oracle::log_marginal(gamma, pp, pn);
    worst = std::max(worst, std::abs(log_evidence - (elbo + kl)));
  }
  return {worst <= 1e-10, "200 instances; max |ln P(x) - (ELBO + KL)| = " + fmt("%.3g", worst) + " (<= 1e-10)"};
}

Outcome jensen_sandwich(Context&) {
  Rng rng(1003);
  std::size_t violations = 0;
  double max_ratio = 0.0;
  const std::size_t bags = 10000;
  for (std::size_t k = 0; k < bags; ++k) {
    const std::size_t M = 1 + uniform_index(rng, 8);
    const std::size_t N = 1 + uniform_index(rng, 8);
    const double spread = 0.1 + 4.0 * uniform_unit(rng);
    const auto s = oracle::normals(rng, M, spread);
    const auto t = oracle::normals(rng, N, spread);
    inference::InferenceConfig cfg;
    cfg.c_pos = cfg.c_neg = std::exp(std::log(0.1) + std::log(1000.0) * uniform_unit(rng));
    const auto post = inference::solve_posteriors(s, t, {oracle::dirichlet(rng, M), oracle::dirichlet(rng, N)}, cfg);
    const auto bag = eval::jensen_gap(s, t, post);
    if (!bag.within_bound()) ++violations;
    if (bag.variance > 1e-9) max_ratio = std::max(max_ratio, bag.gap / (bag.variance / 8.0));
  }
  return {violations == 0, std::to_string(bags - violations) + "/" + std::to_string(bags) +
                               " bags satisfy 0 <= gap <= Var/8; max gap/(Var/8) = " + fmt("%.4f", max_ratio)};
}

Outcome maclaurin_bound(Context&) {
  std::size_t violations = 0;
  double max_ratio = 0.0;
  for (int k = 0; k <= 10000; ++k) {
    const double x = (k - 5000) / 1000.0;
    const double r = std::abs(math::maclaurin_remainder(x));
    if (r > x * x / 8.0) ++violations;
    if (x != 0.0) max_ratio = std::max(max_ratio, r / (x * x / 8.0));
  }
  return {violations == 0, "10001 grid points on [-5, 5]; " + std::to_string(violations) +
                               " violations; max |eps|/(x^2/8) = " + fmt("%.6f", max_ratio)};
}

Outcome gradient_check(Context&) {
  Rng rng(1005);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t M = 1 + uniform_index(rng, 6), N = 1 + uniform_index(rng, 6), dim = 6;
    const double l2 = trial % 2 ? 1e-3 : 0.0;
    const PosteriorPair post{SimplexVector(oracle::dirichlet(rng, M)), SimplexVector(oracle::dirichlet(rng, N))};
    const auto x0 = oracle::normals(rng, dim * (1 + M + N), 0.7);

    const auto loss = [&](const std::vector<double>& x) {
      const inference::RowView user(x.data(), dim);
      std::vector<inference::RowView> pv, nv;
      for (std::size_t m = 0; m < M; ++m) pv.emplace_back(x.data() + dim * (1 + m), dim);
      for (std::size_t n = 0; n < N; ++n) nv.emplace_back(x.data() + dim * (1 + M + n), dim);
      const auto [cp, cn] = inference::interest_centers(pv, nv, post);
      double reg = 0.0;
      for (double v : x) reg += v * v;
      return learning::varbpr_loss(user, cp, cn) + l2 * reg;
    };
    const inference::RowView user(x0.data(), dim);
    std::vector<inference::RowView> pv, nv;
    for (std::size_t m = 0; m < M; ++m) pv.emplace_back(x0.data() + dim * (1 + m), dim);
    for (std::size_t n = 0; n < N; ++n) nv.emplace_back(x0.data() + dim * (1 + M + n), dim);
    const auto g = learning::varbpr_gradients(user, pv, nv, post, l2);
    std::vector<double> analytic = g.user;
    for (const auto& r : g.positives) analytic.insert(analytic.end(), r.begin(), r.end());
    for (const auto& r : g.negatives) analytic.insert(analytic.end(), r.begin(), r.end());
    const auto numeric = oracle::central_difference(loss, x0, 1e-5);
    worst = std::max(worst, oracle::relative_error(analytic, numeric));
  }
  return {worst <= 1e-4, "100 instances; max relative error " + fmt("%.3g", worst) + " (<= 1e-4)"};
}

Outcome reductions(Context&) {
  Rng rng(1006);
  bool bpr_exact = true, one_hot_exact = true;
  double contrastive = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t dim = 8;
    const auto u = oracle::normals(rng, dim, 1.0);
    const auto i = oracle::normals(rng, dim, 1.0);
    const auto j = oracle::normals(rng, dim, 1.0);
    const std::vector<inference::RowView> pv{i}, nv{j};
    const PosteriorPair unit{SimplexVector::uniform(1), SimplexVector::uniform(1)};
    const auto [cp, cn] = inference::interest_centers(pv, nv, unit);
    const double margin = math::dot(u, i) - math::dot(u, j);
    bpr_exact &= learning::varbpr_loss(u, cp, cn) == learning::bpr_loss(margin);
    const auto gv = learning::varbpr_gradients(u, pv, nv, unit, 1e-4);
    const auto gb = learning::bpr_gradients(u, i, j, 1e-4);
    bpr_exact &= gv.user == gb.user && gv.positives == gb.positives && gv.negatives == gb.negatives;

    // One-hot posteriors select a single pair of a larger bag.
    const std::size_t M = 1 + uniform_index(rng, 5), N = 1 + uniform_index(rng, 5);
    std::vector<std::vector<double>> pos, neg;
    for (std::size_t m = 0; m < M; ++m) pos.push_back(oracle::normals(rng, dim, 1.0));
    for (std::size_t n = 0; n < N; ++n) neg.push_back(oracle::normals(rng, dim, 1.0));
    const std::vector<inference::RowView> pvs(pos.begin(), pos.end()), nvs(neg.begin(), neg.end());
    const std::size_t hm = uniform_index(rng, M), hn = uniform_index(rng, N);
    const PosteriorPair hot{SimplexVector::one_hot(M, hm), SimplexVector::one_hot(N, hn)};
    one_hot_exact &= learning::elbo_loss(u, pvs, nvs, hot) ==
                     learning::bpr_loss(math::dot(u, pos[hm]) - math::dot(u, neg[hn]));

    // Contrastive rearrangement with the posterior-weighted centers.
    const PosteriorPair post{SimplexVector(oracle::dirichlet(rng, M)), SimplexVector(oracle::dirichlet(rng, N))};
    const auto [c_plus, c_minus] = inference::interest_centers(pvs, nvs, post);
    const double a = math::dot(u, c_plus), b = math::dot(u, c_minus);
    const double direct = -std::log(std::exp(a) / (std::exp(a) + std::exp(b)));
    contrastive = std::max(contrastive, std::abs(learning::varbpr_loss(u, c_plus, c_minus) - direct));
  }
  return {bpr_exact && one_hot_exact && contrastive <= 1e-12,
          std::string("M=N=1 loss and gradients bitwise equal to BPR: ") + (bpr_exact ? "yes" : "no") +
              "; one-hot double-sum equals selected pair: " + (one_hot_exact ? "yes" : "no") +
              "; max contrastive-form difference " + fmt("%.3g", contrastive) + " (<= 1e-12)"};
}

Outcome invariances(Context&) {
  Rng rng(1007);
  double scale = 0.0, shift = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 8);
    const auto s = oracle::normals(rng, n, 2.0);
    const auto prior = oracle::dirichlet(rng, n);
    const double c = std::exp(std::log(0.1) + std::log(1000.0) * uniform_unit(rng));
    const double k = std::exp(std::log(1e-6) + std::log(1e12) * uniform_unit(rng));
    auto scaled = prior;
    for (auto& v : scaled) v *= k;
    const auto a1 = inference::posterior_positive(s, prior, c), a2 = inference::posterior_positive(s, scaled, c);
    const auto b1 = inference::posterior_negative(s, prior, c), b2 = inference::posterior_negative(s, scaled, c);
    for (std::size_t m = 0; m < n; ++m) {
      scale = std::max(scale, std::abs(a1[m] - a2[m]));
      scale = std::max(scale, std::abs(b1[m] - b2[m]));
    }
    const double offset = 200.0 * (uniform_unit(rng) - 0.5);
    auto moved = s;
    for (auto& v : moved) v += offset;
    const auto p1 = math::stable_softmax(s), p2 = math::stable_softmax(moved);
    for (std::size_t m = 0; m < n; ++m) shift = std::max(shift, std::abs(p1[m] - p2[m]));
  }
  return {scale <= 1e-12 && shift <= 1e-12, "1000 instances; max prior-scale difference " + fmt("%.3g", scale) +
                                                 ", max softmax-shift difference " + fmt("%.3g", shift) + " (<= 1e-12)"};
}

// ---------------------------------------------------------------------------
// Dataset criteria

ExperimentConfig bpr_config(const Context& ctx) {
  auto cfg = Context::base_config(ctx.ml100k_path());
  cfg.train.loss = learning::LossKind::bpr;
  return cfg;
}

ExperimentConfig varbpr_config(const Context& ctx) { return Context::base_config(ctx.ml100k_path()); }

std::string metrics_text(const RankingMetrics& m) {
  return "Recall@20 " + fmt("%.4f", m.recall) + ", NDCG@20 " + fmt("%.4f", m.ndcg);
}

Outcome bpr_baseline(Context& ctx) {
  std::string why;
  const auto* data = ctx.ml100k(why);
  if (!data) return {false, why};
  const auto m = ctx.final_metrics(bpr_config(ctx), *data);
  const bool ok = std::abs(m.recall - 0.3226) <= 0.02 && std::abs(m.ndcg - 0.4374) <= 0.02;
  return {ok, "BPR " + metrics_text(m) + " (targets 0.3226 / 0.4374, +-0.02)"};
}

Outcome varbpr_accuracy(Context& ctx) {
  std::string why;
  const auto* data = ctx.ml100k(why);
  if (!data) return {false, why};
  const auto bpr = ctx.final_metrics(bpr_config(ctx), *data);
  const auto var = ctx.final_metrics(varbpr_config(ctx), *data);
  const double lift = var.ndcg / bpr.ndcg - 1.0;
  const bool ok = std::abs(var.recall - 0.3566) <= 0.02 && std::abs(var.ndcg - 0.4919) <= 0.02 && lift >= 0.05;
  return {ok, "VarBPR " + metrics_text(var) + " (targets 0.3566 / 0.4919, +-0.02); NDCG lift over BPR " +
                  fmt("%+.2f%%", 100.0 * lift) + " (>= +5%)"};
}

Outcome ablation_order(Context& ctx) {
  std::string why;
  const auto* data = ctx.ml100k(why);
  if (!data) return {false, why};
  const auto rows = cli::run_ablation(varbpr_config(ctx), *data);
  std::map<std::string, double> ndcg;
  for (const auto& r : rows) ndcg[r.variant] = r.metrics.ndcg;
  const double full = ndcg["full"], no_prior = ndcg["without_prior"], no_vi = ndcg["without_inference"],
               no_plug = ndcg["without_plug_in"];
  const bool ok = full > no_prior && no_prior > no_vi && no_plug >= full - 0.01;
  return {ok, "NDCG@20 full " + fmt("%.4f", full) + ", w/o prior " + fmt("%.4f", no_prior) + ", w/o VI " +
                  fmt("%.4f", no_vi) + ", w/o plug-in " + fmt("%.4f", no_plug) +
                  " (need full > w/o prior > w/o VI, w/o plug-in >= full - 0.01)"};
}

Outcome exposure_control(Context& ctx) {
  std::string why;
  const auto* data = ctx.ml100k(why);
  if (!data) return {false, why};
  std::vector<double> strengths{2, 4, 6, 8, 10}, aplt, ndcg;
  for (double c : strengths) {
    auto cfg = varbpr_config(ctx);
    cfg.train.inference.lambda_pos = {1.0, 0.0, 0.0};
    cfg.train.inference.lambda_neg = {0.5, 0.0, 0.5};
    cfg.train.inference.c_pos = cfg.train.inference.c_neg = c;
    const auto m = ctx.final_metrics(cfg, *data);
    aplt.push_back(m.aplt);
    ndcg.push_back(m.ndcg);
  }
  const double rho = oracle::spearman(strengths, aplt);
  return {rho > 0.8, "c = 2..10: APLT@20 [" + join(aplt) + "], NDCG@20 [" + join(ndcg) + "]; Spearman rho " +
                         fmt("%.3f", rho) + " (> 0.8)"};
}

Outcome robustness(Context& ctx) {
  std::string why;
  const auto* data = ctx.ml100k(why);
  if (!data) return {false, why};
  const auto rows = cli::run_robustness(varbpr_config(ctx), *data, {0.05, 0.10});
  std::map<std::pair<std::string, double>, double> last;
  for (const auto& r : rows) last[{r.loss, r.rate}] = r.likelihood;  // rows are in epoch order
  const double g5 = last[{"varbpr", 0.05}] - last[{"bpr", 0.05}];
  const double g10 = last[{"varbpr", 0.10}] - last[{"bpr", 0.10}];
  const bool ok = g5 > 0.0 && g10 > 0.0 && g10 >= g5;
  return {ok, "final likelihood BPR/VarBPR at 5%: " + fmt("%.4f", last[{"bpr", 0.05}]) + "/" +
                  fmt("%.4f", last[{"varbpr", 0.05}]) + ", at 10%: " + fmt("%.4f", last[{"bpr", 0.10}]) + "/" +
                  fmt("%.4f", last[{"varbpr", 0.10}]) + "; gaps " + fmt("%.4f", g5) + " -> " + fmt("%.4f", g10)};
}

Outcome scaling(Context& ctx) {
  std::string label;
  std::filesystem::path path;
  const auto& data = ctx.timing_data(label, path);
  auto cfg = Context::base_config(path);
  cfg.scale.epochs = 3;
  const auto rows = cli::run_scale(cfg, data, {2, 4, 8, 16});
  std::vector<double> x, y;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    x.push_back(static_cast<double>(rows[k].bag_size()));
    y.push_back(rows[k].mean_epoch_seconds);
  }
  const double r2 = cli::linear_fit_r2(x, y);
  return {r2 >= 0.9, label + "; s/epoch at M+N = 2,4,8,16: [" + join(y, "%.3f") + "], BPR " +
                         fmt("%.3f", rows[0].mean_epoch_seconds) + "; R^2 " + fmt("%.4f", r2) + " (>= 0.9)"};
}

Outcome kl_trends(Context& ctx) {
  std::string label;
  std::filesystem::path path;
  const auto& data = ctx.timing_data(label, path);
  auto cfg = Context::base_config(path);
  cfg.train.epochs = 10;
  const auto model = learning::train(cfg.train, data.bundle, data.signals).model;

  Rng bag_rng(derive_seed(cfg.train.seed, 77));
  const auto bags = sampling::epoch_bags(data.bundle, 4, 4, bag_rng);
  std::vector<double> bag_pos, bag_neg;
  for (double c : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
    auto inf = cfg.train.inference;
    inf.c_pos = inf.c_neg = c;
    const auto k = eval::kl_compliance(model, data.bundle, data.signals, inf, bags, eval::ComplianceScope::bag);
    bag_pos.push_back(k.pos);
    bag_neg.push_back(k.neg);
  }
  std::vector<double> global_pos, global_neg;
  for (std::size_t M : {2, 4, 8, 16}) {
    Rng rng(derive_seed(cfg.train.seed, 78));
    const auto epoch = sampling::epoch_bags(data.bundle, M, M, rng);
    const auto k = eval::kl_compliance(model, data.bundle, data.signals, cfg.train.inference, epoch,
                                       eval::ComplianceScope::global);
    global_pos.push_back(k.pos);
    global_neg.push_back(k.neg);
  }
  const bool ok = non_increasing(bag_pos) && non_increasing(bag_neg) && non_increasing(global_pos) &&
                  non_increasing(global_neg);
  return {ok, label + "; bag KL+ over c=0.5..16 [" + join(bag_pos) + "], KL- [" + join(bag_neg) +
                  "]; global KL+ over M=N=2..16 [" + join(global_pos) + "], KL- [" + join(global_neg) + "]"};
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome(Context&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  std::optional<std::string> data_path;
  app.add_option("--only", only, "criterion numbers to run")->delimiter(',');
  app.add_option("--data", data_path, "MovieLens-100K u.data (or its directory)");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {1, "closed-form posterior optimality vs simplex grid search", posterior_optimality},
      {2, "ELBO identity by exhaustive enumeration", elbo_identity},
      {3, "Jensen sandwich 0 <= gap <= Var/8", jensen_sandwich},
      {4, "Maclaurin remainder bound", maclaurin_bound},
      {5, "analytic vs finite-difference gradients", gradient_check},
      {6, "BPR, one-hot and contrastive reductions", reductions},
      {7, "prior scale and softmax shift invariance", invariances},
      {8, "BPR baseline on ML-100K", bpr_baseline},
      {9, "VarBPR accuracy on ML-100K", varbpr_accuracy},
      {10, "ablation ordering on ML-100K", ablation_order},
      {11, "long-tail exposure rises with prior strength", exposure_control},
      {12, "likelihood under injected noise", robustness},
      {13, "epoch time linear in M+N", scaling},
      {14, "KL compliance trends", kl_trends},
  };

  Context ctx(data_path ? std::optional<std::filesystem::path>(*data_path) : std::nullopt);
  const std::set<int> selected(only.begin(), only.end());
  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome out;
    try {
      out = c.run(ctx);
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    failures += out.pass ? 0 : 1;
    std::cout << (out.pass ? "PASS" : "FAIL") << "  criterion " << c.id << ": " << c.title << " | " << out.detail
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
