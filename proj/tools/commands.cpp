#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

#include "varbpr/checkpoint.hpp"
#include "varbpr/random.hpp"
#include "varbpr/sampler.hpp"

namespace varbpr::cli {

namespace {

using nlohmann::json;

// Seed streams derived from model.seed so that each consumer is independent.
constexpr std::uint64_t kSplitStream = 10;
constexpr std::uint64_t kNoiseStream = 11;
constexpr std::uint64_t kLikelihoodStream = 1000;
constexpr std::uint64_t kJensenStream = 2000;
constexpr std::uint64_t kComplianceStream = 3000;

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

json metrics_json(const RankingMetrics& m) { return json{{"recall", m.recall}, {"ndcg", m.ndcg}, {"aplt", m.aplt}}; }

json row_json(const eval::DiagnosticsRow& r) {
  return json{{"epoch", r.epoch},
              {"loss", r.loss},
              {"recall_at_k", r.recall_k},
              {"ndcg_at_k", r.ndcg_k},
              {"aplt_at_k", r.aplt_k},
              {"likelihood", r.likelihood},
              {"log_likelihood", r.log_likelihood},
              {"jensen_gap_mean", r.jensen_gap_mean},
              {"jensen_gap_max", r.jensen_gap_max},
              {"margin_var_mean", r.margin_var_mean},
              {"kl_bag_pos", r.kl_bag_pos},
              {"kl_bag_neg", r.kl_bag_neg},
              {"kl_global_pos", r.kl_global_pos},
              {"kl_global_neg", r.kl_global_neg}};
}

json data_json(const PreparedData& d) {
  return json{{"users", d.bundle.user_count},
              {"items", d.bundle.item_count},
              {"records", d.log.records.size()},
              {"duplicates_dropped", d.log.duplicates_dropped},
              {"train_positives", d.bundle.train_size()},
              {"test_positives", d.bundle.test_size()},
              {"dropped_users", d.bundle.dropped_users},
              {"has_quality", d.signals.has_quality()}};
}

void write_json(const std::filesystem::path& path, const json& j) {
  auto out = open_output(path);
  out << j.dump(2) << '\n';
}

double direction_t(std::size_t k, std::size_t steps) {
  return steps <= 1 ? 1.0 : static_cast<double>(k) / static_cast<double>(steps - 1);
}

}  // namespace

PreparedData prepare_data(const ExperimentConfig& config) {
  PreparedData d;
  d.log = data::load_ratings(config.dataset.path, config.dataset.format);
  const auto split_seed = derive_seed(config.train.seed, kSplitStream);
  if (config.dataset.split == SplitKind::clean_test) {
    if (!d.log.has_ratings()) throw ConfigError("clean_test split needs ratings; use implicit_80_20");
    d.bundle = data::split_clean_test(d.log, split_seed);
  } else {
    d.bundle = data::split_implicit(d.log, config.dataset.test_fraction, split_seed);
  }
  if (config.noise_rate > 0.0)
    d.bundle = data::inject_noise(d.bundle, config.noise_rate, derive_seed(config.train.seed, kNoiseStream));
  d.signals = data::compute_signals(d.bundle, d.log);
  return d;
}

PreparedData with_noise(const PreparedData& clean, double rate, std::uint64_t seed) {
  PreparedData d;
  d.log = clean.log;
  d.bundle = rate > 0.0 ? data::inject_noise(clean.bundle, rate, seed) : clean.bundle;
  d.signals = data::compute_signals(d.bundle, d.log);
  return d;
}

RankingMetrics ranking_metrics(const learning::EmbeddingModel& model, const PreparedData& data, std::size_t K) {
  const auto lists = eval::rank_topk(model, data.bundle, K, eval::eval_threads_from_env());
  return RankingMetrics{eval::recall_at_k(lists, data.bundle.test_positives),
                        eval::ndcg_at_k(lists, data.bundle.test_positives, K),
                        eval::aplt_at_k(lists, data.signals, K)};
}

eval::DiagnosticsRow evaluate_point(const learning::EmbeddingModel& model, const ExperimentConfig& config,
                                    const PreparedData& data, std::size_t epoch, double loss) {
  eval::DiagnosticsRow row;
  row.epoch = epoch;
  row.loss = loss;
  const auto m = ranking_metrics(model, data, config.eval.K);
  row.recall_k = m.recall;
  row.ndcg_k = m.ndcg;
  row.aplt_k = m.aplt;

  const auto seed = config.train.seed;
  Rng like_rng(derive_seed(seed, kLikelihoodStream + epoch));
  const auto like = eval::likelihood_probe(model, data.bundle, config.eval.likelihood_samples, like_rng);
  row.likelihood = like.sigmoid_mean;
  row.log_likelihood = like.log_mean;
  if (!config.eval.diagnostics) return row;

  const auto M = config.train.effective_M();
  const auto N = config.train.effective_N();
  Rng jensen_rng(derive_seed(seed, kJensenStream + epoch));
  auto schedule = sampling::epoch_schedule(data.bundle, jensen_rng);
  schedule.resize(std::min(schedule.size(), config.eval.probe_bags));
  std::vector<sampling::EnrichedInteraction> probe;
  probe.reserve(schedule.size());
  for (const auto& slot : schedule) probe.push_back(sampling::sample_anchored_bag(slot, data.bundle, M, N, jensen_rng));
  const auto jensen = eval::jensen_gap_probe(model, probe, data.signals, config.train.inference);
  row.jensen_gap_mean = jensen.mean_gap;
  row.jensen_gap_max = jensen.max_gap;
  row.margin_var_mean = jensen.mean_variance;

  const auto bag_kl = eval::kl_compliance(model, data.bundle, data.signals, config.train.inference, probe,
                                          eval::ComplianceScope::bag);
  row.kl_bag_pos = bag_kl.pos;
  row.kl_bag_neg = bag_kl.neg;
  // Global compliance pools a full epoch of bags so every user is covered.
  Rng kl_rng(derive_seed(seed, kComplianceStream + epoch));
  const auto epoch_bags = sampling::epoch_bags(data.bundle, M, N, kl_rng);
  const auto global_kl = eval::kl_compliance(model, data.bundle, data.signals, config.train.inference, epoch_bags,
                                             eval::ComplianceScope::global);
  row.kl_global_pos = global_kl.pos;
  row.kl_global_neg = global_kl.neg;
  return row;
}

RunOutcome run_experiment(const ExperimentConfig& config, const PreparedData& data, bool with_rows) {
  std::vector<eval::DiagnosticsRow> rows;
  const auto every = std::max<std::size_t>(1, config.eval.eval_every);
  learning::EpochCallback callback;
  if (with_rows) {
    callback = [&](const learning::EpochStats& stats, const learning::EmbeddingModel& model) {
      if (stats.epoch % every == 0 || stats.epoch == config.train.epochs)
        rows.push_back(evaluate_point(model, config, data, stats.epoch, stats.mean_loss));
    };
  }
  auto result = learning::train(config.train, data.bundle, data.signals, callback);
  RunOutcome out{std::move(result.model), std::move(result.epochs), std::move(rows), {}};
  if (!out.rows.empty()) {
    const auto& last = out.rows.back();
    out.final_metrics = RankingMetrics{last.recall_k, last.ndcg_k, last.aplt_k};
  } else {
    out.final_metrics = ranking_metrics(out.model, data, config.eval.K);
  }
  return out;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& config, const PreparedData& data) {
  const auto& sw = config.sweep;
  std::vector<std::pair<std::size_t, std::size_t>> directions;
  for (std::size_t a = 0; a < sw.direction_steps; ++a) {
    if (sw.mode == SweepMode::lockstep) {
      directions.emplace_back(a, a);
    } else {
      for (std::size_t b = 0; b < sw.direction_steps; ++b) directions.emplace_back(a, b);
    }
  }

  std::vector<SweepRow> rows;
  for (const auto& [a, b] : directions) {
    for (double strength : sw.strengths) {
      SweepRow row;
      row.pos_direction = a;
      row.neg_direction = b;
      const double tp = direction_t(a, sw.direction_steps);
      const double tn = direction_t(b, sw.direction_steps);
      row.lambda_pos = {tp, 1.0 - tp, sw.lambda3_pos};
      row.lambda_neg = {0.5 * tn, 0.5 * (1.0 - tn), sw.lambda3_neg};
      row.strength = strength;

      ExperimentConfig cell = config;
      cell.train.inference.lambda_pos = row.lambda_pos;
      cell.train.inference.lambda_neg = row.lambda_neg;
      cell.train.inference.c_pos = strength;
      cell.train.inference.c_neg = strength;
      try {
        row.metrics = run_experiment(cell, data, false).final_metrics;
      } catch (const learning::NumericError& e) {
        row.status = "numeric_failure";
        std::cerr << "sweep cell failed: " << e.what() << '\n';
      } catch (const std::exception& e) {
        row.status = "error";
        std::cerr << "sweep cell failed: " << e.what() << '\n';
      }
      rows.push_back(row);
    }
  }
  mark_pareto(rows);
  return rows;
}

void mark_pareto(std::vector<SweepRow>& rows) {
  for (auto& r : rows) {
    r.pareto = false;
    if (r.status != "ok") continue;
    bool dominated = false;
    for (const auto& o : rows) {
      if (&o == &r || o.status != "ok") continue;
      const bool ge = o.metrics.ndcg >= r.metrics.ndcg && o.metrics.aplt >= r.metrics.aplt;
      const bool gt = o.metrics.ndcg > r.metrics.ndcg || o.metrics.aplt > r.metrics.aplt;
      if (ge && gt) {
        dominated = true;
        break;
      }
    }
    r.pareto = !dominated;
  }
}

std::vector<AblationRow> run_ablation(const ExperimentConfig& config, const PreparedData& data) {
  using learning::LossKind;
  using learning::PosteriorMode;
  struct Variant {
    const char* name;
    LossKind loss;
    PosteriorMode posterior;
    bool flat_prior;
  };
  const Variant variants[] = {
      {"full", LossKind::varbpr, PosteriorMode::closed_form, false},
      {"without_prior", LossKind::varbpr, PosteriorMode::closed_form, true},
      {"without_inference", LossKind::varbpr, PosteriorMode::uniform, false},
      {"without_plug_in", LossKind::varbpr_elbo, PosteriorMode::closed_form, false},
  };
  std::vector<AblationRow> rows;
  for (const auto& v : variants) {
    ExperimentConfig cell = config;
    cell.train.loss = v.loss;
    cell.train.posterior = v.posterior;
    if (v.flat_prior) {
      cell.train.inference.lambda_pos = {};
      cell.train.inference.lambda_neg = {};
    }
    rows.push_back({v.name, v.loss, v.posterior, run_experiment(cell, data, false).final_metrics});
  }
  return rows;
}

std::vector<LikelihoodRow> run_robustness(const ExperimentConfig& config, const PreparedData& clean,
                                          const std::vector<double>& rates) {
  std::vector<LikelihoodRow> rows;
  const auto every = std::max<std::size_t>(1, config.eval.eval_every);
  for (double rate : rates) {
    const auto noisy = with_noise(clean, rate, derive_seed(config.train.seed, kNoiseStream));
    for (auto kind : {learning::LossKind::bpr, learning::LossKind::varbpr}) {
      auto train_cfg = config.train;
      train_cfg.loss = kind;
      const std::string name(learning::loss_kind_name(kind));
      learning::train(train_cfg, noisy.bundle, noisy.signals,
                      [&](const learning::EpochStats& stats, const learning::EmbeddingModel& model) {
                        if (stats.epoch % every != 0 && stats.epoch != train_cfg.epochs) return;
                        // Same probe stream for both losses so the curves are paired.
                        Rng rng(derive_seed(config.train.seed, kLikelihoodStream + stats.epoch));
                        const auto est =
                            eval::likelihood_probe(model, noisy.bundle, config.eval.likelihood_samples, rng);
                        rows.push_back({name, rate, stats.epoch, est.sigmoid_mean, est.log_mean});
                      });
    }
  }
  return rows;
}

std::vector<TimingRow> run_scale(const ExperimentConfig& config, const PreparedData& data,
                                 const std::vector<std::size_t>& bag_sizes) {
  const auto time_config = [&](learning::TrainConfig cfg, const std::string& name) {
    cfg.epochs = config.scale.epochs;
    learning::Trainer trainer(cfg, data.bundle, data.signals);
    TimingRow row{name, cfg.effective_M(), cfg.effective_N(), cfg.epochs, 0.0, 0.0};
    double total = 0.0;
    double best = 0.0;
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
      const auto stats = trainer.run_epoch();
      total += stats.seconds;
      best = e == 0 ? stats.seconds : std::min(best, stats.seconds);
    }
    row.mean_epoch_seconds = cfg.epochs ? total / static_cast<double>(cfg.epochs) : 0.0;
    row.min_epoch_seconds = best;
    return row;
  };

  std::vector<TimingRow> rows;
  auto base = config.train;
  base.loss = learning::LossKind::bpr;
  rows.push_back(time_config(base, "bpr"));
  for (auto size : bag_sizes) {
    if (size < 2) throw ConfigError("scale.bag_sizes entries must be at least 2");
    auto cfg = config.train;
    if (cfg.loss == learning::LossKind::bpr) cfg.loss = learning::LossKind::varbpr;
    cfg.M = size / 2;
    cfg.N = size - cfg.M;
    rows.push_back(time_config(cfg, std::string(learning::loss_kind_name(cfg.loss))));
  }
  return rows;
}

double linear_fit_r2(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("linear_fit_r2 needs two or more points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return syy == 0.0 ? 1.0 : 0.0;
  return sxy * sxy / (sxx * syy);
}

void write_epochs_csv(const std::filesystem::path& path, const std::vector<eval::DiagnosticsRow>& rows) {
  auto out = open_output(path);
  out << eval::diagnostics_csv_header() << '\n';
  for (const auto& r : rows) out << eval::to_csv(r) << '\n';
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
  auto out = open_output(path);
  out << "pos_direction,neg_direction,lambda1_pos,lambda2_pos,lambda3_pos,lambda1_neg,lambda2_neg,lambda3_neg,"
         "strength,recall_at_k,ndcg_at_k,aplt_at_k,status,pareto\n";
  for (const auto& r : rows) {
    out << r.pos_direction << ',' << r.neg_direction << ',' << fmt(r.lambda_pos.signal) << ','
        << fmt(r.lambda_pos.quality) << ',' << fmt(r.lambda_pos.hardness) << ',' << fmt(r.lambda_neg.signal) << ','
        << fmt(r.lambda_neg.quality) << ',' << fmt(r.lambda_neg.hardness) << ',' << fmt(r.strength) << ','
        << fmt(r.metrics.recall) << ',' << fmt(r.metrics.ndcg) << ',' << fmt(r.metrics.aplt) << ',' << r.status
        << ',' << (r.pareto ? 1 : 0) << '\n';
  }
}

void write_ablation_csv(const std::filesystem::path& path, const std::vector<AblationRow>& rows) {
  auto out = open_output(path);
  out << "variant,loss,posterior,recall_at_k,ndcg_at_k,aplt_at_k\n";
  for (const auto& r : rows) {
    out << r.variant << ',' << learning::loss_kind_name(r.loss) << ',' << learning::posterior_mode_name(r.posterior)
        << ',' << fmt(r.metrics.recall) << ',' << fmt(r.metrics.ndcg) << ',' << fmt(r.metrics.aplt) << '\n';
  }
}

void write_likelihood_csv(const std::filesystem::path& path, const std::vector<LikelihoodRow>& rows) {
  auto out = open_output(path);
  out << "loss,rate,epoch,likelihood,log_likelihood\n";
  for (const auto& r : rows)
    out << r.loss << ',' << fmt(r.rate) << ',' << r.epoch << ',' << fmt(r.likelihood) << ','
        << fmt(r.log_likelihood) << '\n';
}

void write_timing_csv(const std::filesystem::path& path, const std::vector<TimingRow>& rows) {
  auto out = open_output(path);
  out << "loss,M,N,bag_size,epochs,mean_epoch_seconds,min_epoch_seconds\n";
  for (const auto& r : rows)
    out << r.loss << ',' << r.M << ',' << r.N << ',' << r.bag_size() << ',' << r.epochs << ','
        << fmt(r.mean_epoch_seconds) << ',' << fmt(r.min_epoch_seconds) << '\n';
}

int cmd_train(const ExperimentConfig& config) {
  const auto data = prepare_data(config);
  const auto& dir = config.output_dir;
  std::filesystem::create_directories(dir);
  data::export_remap_csv(data.log.user_raw_ids, dir / "users_remap.csv");
  data::export_remap_csv(data.log.item_raw_ids, dir / "items_remap.csv");

  const auto outcome = run_experiment(config, data, true);
  const auto echo = config_echo_json(config);
  write_epochs_csv(dir / "epochs.csv", outcome.rows);
  learning::save_checkpoint(dir / "model.ckpt", outcome.model, echo);

  json rows = json::array();
  for (const auto& r : outcome.rows) rows.push_back(row_json(r));
  write_json(dir / "report.json", json{{"config", json::parse(echo)},
                                       {"data", data_json(data)},
                                       {"rows", rows},
                                       {"final", metrics_json(outcome.final_metrics)}});

  // Wall-clock lives in a sidecar so report.json stays reproducible.
  json epochs = json::array();
  double total = 0.0;
  for (const auto& e : outcome.epochs) {
    epochs.push_back(json{{"epoch", e.epoch}, {"seconds", e.seconds}, {"bags", e.bags}});
    total += e.seconds;
  }
  write_json(dir / "run_meta.json", json{{"epochs", epochs}, {"train_seconds", total}});

  std::cout << "recall@" << config.eval.K << " " << fmt(outcome.final_metrics.recall) << "  ndcg@" << config.eval.K
            << " " << fmt(outcome.final_metrics.ndcg) << "  aplt@" << config.eval.K << " "
            << fmt(outcome.final_metrics.aplt) << '\n';
  return 0;
}

int cmd_evaluate(const ExperimentConfig& config, const std::optional<std::filesystem::path>& checkpoint) {
  const auto path = checkpoint.value_or(config.output_dir / "model.ckpt");
  const auto ck = learning::load_checkpoint(path);
  const auto data = prepare_data(config);
  if (ck.model.user_count() != data.bundle.user_count || ck.model.item_count() != data.bundle.item_count)
    throw ConfigError("checkpoint shape does not match the configured dataset");
  const auto row = evaluate_point(ck.model, config, data, 0, 0.0);
  write_json(config.output_dir / "evaluation.json",
             json{{"checkpoint", path.string()}, {"data", data_json(data)}, {"metrics", row_json(row)}});
  std::cout << eval::diagnostics_csv_header() << '\n' << eval::to_csv(row) << '\n';
  return 0;
}

int cmd_sweep(const ExperimentConfig& config) {
  const auto data = prepare_data(config);
  auto rows = run_sweep(config, data);
  write_sweep_csv(config.output_dir / "pareto.csv", rows);
  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.status != "ok";
  std::cout << rows.size() << " cells, " << failed << " failed\n";
  return 0;
}

int cmd_ablate(const ExperimentConfig& config) {
  const auto data = prepare_data(config);
  const auto rows = run_ablation(config, data);
  write_ablation_csv(config.output_dir / "table.csv", rows);
  for (const auto& r : rows)
    std::cout << r.variant << " recall " << fmt(r.metrics.recall) << " ndcg " << fmt(r.metrics.ndcg) << '\n';
  return 0;
}

int cmd_robustness(const ExperimentConfig& config) {
  auto clean_cfg = config;
  clean_cfg.noise_rate = 0.0;
  const auto clean = prepare_data(clean_cfg);
  const auto rows = run_robustness(config, clean, config.robustness.rates);
  write_likelihood_csv(config.output_dir / "likelihood.csv", rows);
  return 0;
}

int cmd_scale(const ExperimentConfig& config) {
  const auto data = prepare_data(config);
  const auto rows = run_scale(config, data, config.scale.bag_sizes);
  write_timing_csv(config.output_dir / "timing.csv", rows);
  std::vector<double> x, y;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    x.push_back(static_cast<double>(rows[i].bag_size()));
    y.push_back(rows[i].mean_epoch_seconds);
  }
  for (const auto& r : rows)
    std::cout << r.loss << " M+N=" << r.bag_size() << " " << fmt(r.mean_epoch_seconds) << " s/epoch\n";
  if (x.size() >= 2) std::cout << "linear fit R^2 " << fmt(linear_fit_r2(x, y)) << '\n';
  return 0;
}

}  // namespace varbpr::cli
