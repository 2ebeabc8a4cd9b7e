#include "cloudlead/forecast.hpp"

#include <algorithm>
#include <cmath>

#include "cloudlead/events.hpp"
#include "cloudlead/rng.hpp"
#include "cloudlead/sim.hpp"

namespace cloudlead::forecast {

std::string mode_name(AblationMode m) {
  switch (m) {
    case AblationMode::kSelected: return "selected";
    case AblationMode::kSingle: return "single";
    case AblationMode::kAll: return "all";
    case AblationMode::kRandom: return "random";
  }
  return "?";
}

AblationMode mode_from_name(const std::string& s) {
  if (s == "selected") return AblationMode::kSelected;
  if (s == "single") return AblationMode::kSingle;
  if (s == "all") return AblationMode::kAll;
  if (s == "random") return AblationMode::kRandom;
  throw ConfigError("unknown ablation mode '" + s + "'");
}

Eigen::Index window_count(Eigen::Index steps, int history, int horizon, int stride) {
  const Eigen::Index span = history + horizon;
  if (steps < span) return 0;
  return (steps - span) / stride + 1;
}

SplitSamples assemble_samples(const Dataset& ds, const ForecastTask& task) {
  const int target = ds.site_index(task.target_id);
  if (target < 0) throw ConfigError("unknown target site '" + task.target_id + "'");
  if (task.history_steps < 1 || task.horizon_steps < 1 || task.stride_steps < 1)
    throw ConfigError("history, horizon and stride must be >= 1");

  // Channel order: target, then detectors by ascending distance to it.
  std::vector<int> channels{target};
  {
    std::vector<std::pair<double, int>> by_dist;
    for (const auto& id : task.detector_ids) {
      const int i = ds.site_index(id);
      if (i < 0) throw ConfigError("unknown detector site '" + id + "'");
      if (i == target) throw ConfigError("target cannot be its own detector");
      const double dx = ds.sites[i].x_km - ds.sites[target].x_km;
      const double dy = ds.sites[i].y_km - ds.sites[target].y_km;
      by_dist.push_back({std::hypot(dx, dy), i});
    }
    std::stable_sort(by_dist.begin(), by_dist.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [d, i] : by_dist) {
      (void)d;
      if (std::find(channels.begin(), channels.end(), i) != channels.end())
        throw ConfigError("duplicate detector site '" + ds.sites[i].id + "'");
      channels.push_back(i);
    }
  }

  const int M = ds.steps_per_day();
  const Eigen::Index total = ds.total_steps();
  const Eigen::VectorXd bell = sim::clear_sky_profile(M);

  SplitSamples out;
  for (int c : channels) out.channel_ids.push_back(ds.sites[c].id);
  const int train_days = static_cast<int>(std::floor(ds.n_days * 0.7));
  const int val_days = static_cast<int>(std::floor(ds.n_days * 0.2));
  out.train_step_end = static_cast<Eigen::Index>(train_days) * M;
  out.val_step_end = static_cast<Eigen::Index>(train_days + val_days) * M;
  if (train_days < 1 || val_days < 1 || train_days + val_days >= ds.n_days)
    throw ConfigError("dataset too short for a 70/20/10 day split");

  const Eigen::Index first_end = task.history_steps - 1;
  if (first_end + task.horizon_steps >= total)
    throw ConfigError("dataset too short for history " + std::to_string(task.history_steps) +
                      " + horizon " + std::to_string(task.horizon_steps));

  for (Eigen::Index end = first_end; end + task.horizon_steps < total;
       end += task.stride_steps) {
    const Eigen::Index lo = end - task.history_steps + 1;
    const Eigen::Index hi = end + task.horizon_steps;  // last target step

    // Night-only horizons carry no signal; drop them.
    bool daylight = false;
    for (Eigen::Index t = end + 1; t <= hi && !daylight; ++t)
      daylight = bell[t % M] > 0.0;
    if (!daylight) continue;

    std::vector<tcn::TrainSample>* bucket = nullptr;
    std::vector<Eigen::Index>* ends = nullptr;
    if (hi < out.train_step_end) {
      bucket = &out.train;
      ends = &out.train_end;
    } else if (lo >= out.train_step_end && hi < out.val_step_end) {
      bucket = &out.val;
      ends = &out.val_end;
    } else if (lo >= out.val_step_end) {
      bucket = &out.test;
      ends = &out.test_end;
    } else {
      continue;  // straddles a boundary
    }

    tcn::TrainSample s;
    s.input.resize(static_cast<Eigen::Index>(channels.size()), task.history_steps);
    for (std::size_t c = 0; c < channels.size(); ++c)
      s.input.row(static_cast<Eigen::Index>(c)) =
          ds.values.row(channels[c]).segment(lo, task.history_steps);
    s.target = ds.values.row(target).segment(end + 1, task.horizon_steps).transpose();
    bucket->push_back(std::move(s));
    ends->push_back(end);
  }
  if (out.train.empty() || out.test.empty())
    throw ConfigError("insufficient data: empty train or test split");
  return out;
}

Eigen::VectorXd persistence_forecast(const Eigen::Ref<const Eigen::VectorXd>& history,
                                     Eigen::Index window_end_abs, int steps_per_day,
                                     int horizon, bool value_hold) {
  if (history.size() < 1) throw ConfigError("persistence needs a non-empty window");
  const double last = history[history.size() - 1];
  Eigen::VectorXd pred(horizon);
  if (value_hold) {
    pred.setConstant(last);
    return pred;
  }
  const Eigen::VectorXd bell = sim::clear_sky_profile(steps_per_day);
  const double cs_now = bell[window_end_abs % steps_per_day];
  double index = cs_now > 1e-9 ? last / cs_now : 1.0;
  index = std::min(std::max(index, 0.0), 1.25);
  for (int h = 0; h < horizon; ++h) {
    const Eigen::Index t = window_end_abs + 1 + h;
    pred[h] = std::min(1.0, std::max(0.0, index * bell[t % steps_per_day]));
  }
  return pred;
}

EvalReport evaluate(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
    throw ConfigError("evaluate: shape mismatch");
  if (pred.size() == 0) throw ConfigError("evaluate: empty input");
  EvalReport r;
  const Eigen::ArrayXXd err = (pred - truth).array();
  r.rmse = std::sqrt(err.square().mean());
  r.bias = err.mean();
  r.n_samples = pred.cols();
  r.per_horizon_rmse.resize(pred.rows());
  for (Eigen::Index h = 0; h < pred.rows(); ++h)
    r.per_horizon_rmse[h] = std::sqrt(err.row(h).square().mean());
  std::vector<double> per_window(static_cast<std::size_t>(pred.cols()));
  for (Eigen::Index w = 0; w < pred.cols(); ++w)
    per_window[static_cast<std::size_t>(w)] = std::sqrt(err.col(w).square().mean());
  r.sample_rmse = quartiles(per_window);
  return r;
}

RunOutput train_and_evaluate(const Dataset& ds, const ForecastTask& task,
                             tcn::TcnConfig tcn_cfg, const tcn::TrainConfig& train_cfg,
                             int threads) {
  SplitSamples samples = assemble_samples(ds, task);
  tcn_cfg.in_channels = static_cast<int>(samples.channel_ids.size());
  tcn_cfg.out_dim = task.horizon_steps;
  tcn_cfg.seq2seq = false;

  tcn::Tcn<double> model(tcn_cfg);
  RunOutput out;
  out.train_result = tcn::train(model, samples.train, samples.val, train_cfg, threads);
  out.channel_ids = samples.channel_ids;

  const auto n_test = static_cast<Eigen::Index>(samples.test.size());
  out.pred.resize(task.horizon_steps, n_test);
  out.truth.resize(task.horizon_steps, n_test);
  std::vector<Eigen::VectorXd> preds(static_cast<std::size_t>(n_test));
  parallel_for(n_test, threads, [&](std::int64_t i) {
    preds[static_cast<std::size_t>(i)] =
        tcn::predict(model, samples.test[static_cast<std::size_t>(i)].input);
  });
  for (Eigen::Index i = 0; i < n_test; ++i) {
    out.pred.col(i) = preds[static_cast<std::size_t>(i)];
    out.truth.col(i) = samples.test[static_cast<std::size_t>(i)].target.col(0);
  }
  out.window_end = samples.test_end;
  out.report = evaluate(out.pred, out.truth);
  return out;
}

namespace {

// Per-day cloudiness of the target site, for the cloudy-subset metrics.
std::vector<bool> target_cloudy_days(const Dataset& ds, int target, double dx) {
  std::vector<bool> cloudy(static_cast<std::size_t>(ds.n_days));
  for (int d = 0; d < ds.n_days; ++d)
    cloudy[static_cast<std::size_t>(d)] =
        events::extract_events(ds.day_values(target, d), dx).any();
  return cloudy;
}

double rmse_on_windows(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth,
                       const std::vector<char>& keep) {
  double se = 0.0;
  Eigen::Index n = 0;
  for (Eigen::Index w = 0; w < pred.cols(); ++w) {
    if (!keep[static_cast<std::size_t>(w)]) continue;
    se += (pred.col(w) - truth.col(w)).squaredNorm();
    n += pred.rows();
  }
  return n > 0 ? std::sqrt(se / static_cast<double>(n)) : 0.0;
}

}  // namespace

std::vector<AblationRow> run_ablation(const Dataset& ds,
                                      const detector::DetectorNetwork& network,
                                      const AblationConfig& cfg) {
  const int target = ds.site_index(network.target_id);
  if (target < 0) throw ConfigError("unknown target site '" + network.target_id + "'");
  if (network.member_ids.empty()) throw ConfigError("detector network is empty");

  std::vector<std::string> all_others;
  for (const auto& s : ds.sites)
    if (s.id != network.target_id) all_others.push_back(s.id);

  struct Job {
    AblationMode mode;
    std::uint64_t seed;
    int draw;
    std::vector<std::string> detectors;
  };
  std::vector<Job> jobs;
  for (std::uint64_t seed : cfg.seeds) {
    jobs.push_back({AblationMode::kSelected, seed, 0, network.member_ids});
    jobs.push_back({AblationMode::kSingle, seed, 0, {}});
    jobs.push_back({AblationMode::kAll, seed, 0, all_others});
    for (int draw = 0; draw < cfg.n_random_draws; ++draw) {
      Rng rng(splitmix64(seed ^ splitmix64(0xD0AA + static_cast<std::uint64_t>(draw))));
      std::vector<std::string> pool = all_others;
      rng.shuffle(pool);
      pool.resize(std::min(pool.size(), network.member_ids.size()));
      jobs.push_back({AblationMode::kRandom, seed, draw, std::move(pool)});
    }
  }

  const std::vector<bool> cloudy = target_cloudy_days(ds, target, cfg.dx);
  const int M = ds.steps_per_day();

  std::vector<AblationRow> rows(jobs.size());
  // Jobs are independent; intra-job training stays single-threaded so the
  // result is identical whatever the outer schedule.
  parallel_for(static_cast<std::int64_t>(jobs.size()), cfg.threads, [&](std::int64_t j) {
    const Job& job = jobs[static_cast<std::size_t>(j)];
    ForecastTask task{network.target_id, job.detectors, cfg.history_steps, cfg.horizon_steps,
                      cfg.stride_steps};
    tcn::TcnConfig tc = cfg.tcn;
    tc.seed = job.seed;
    tcn::TrainConfig tr = cfg.train;
    tr.seed = job.seed;
    RunOutput run = train_and_evaluate(ds, task, tc, tr, 1);

    std::vector<char> cloudy_keep(run.window_end.size());
    for (std::size_t w = 0; w < run.window_end.size(); ++w) {
      const int day = static_cast<int>((run.window_end[w] + 1) / M);
      cloudy_keep[w] = cloudy[static_cast<std::size_t>(std::min(day, ds.n_days - 1))] ? 1 : 0;
    }

    Eigen::MatrixXd ppred(cfg.horizon_steps, run.window_end.size());
    for (std::size_t w = 0; w < run.window_end.size(); ++w) {
      // Recover the target-channel history for the persistence baseline.
      const Eigen::Index end = run.window_end[w];
      const Eigen::Index lo = end - cfg.history_steps + 1;
      ppred.col(static_cast<Eigen::Index>(w)) = persistence_forecast(
          ds.values.row(target).segment(lo, cfg.history_steps).transpose(), end, M,
          cfg.horizon_steps);
    }

    AblationRow row;
    row.mode = job.mode;
    row.seed = job.seed;
    row.draw = job.draw;
    row.rmse = run.report.rmse;
    row.bias = run.report.bias;
    const std::vector<char> all_keep(run.window_end.size(), 1);
    row.rmse_cloudy = rmse_on_windows(run.pred, run.truth, cloudy_keep);
    row.persistence_rmse = rmse_on_windows(ppred, run.truth, all_keep);
    row.persistence_rmse_cloudy = rmse_on_windows(ppred, run.truth, cloudy_keep);
    rows[static_cast<std::size_t>(j)] = row;
  });
  return rows;
}

std::vector<double> per_seed_rmse(const std::vector<AblationRow>& rows, AblationMode mode) {
  std::vector<std::pair<std::uint64_t, std::vector<double>>> by_seed;
  for (const auto& r : rows) {
    if (r.mode != mode) continue;
    auto it = std::find_if(by_seed.begin(), by_seed.end(),
                           [&](const auto& p) { return p.first == r.seed; });
    if (it == by_seed.end()) {
      by_seed.push_back({r.seed, {r.rmse}});
    } else {
      it->second.push_back(r.rmse);
    }
  }
  std::vector<double> out;
  for (auto& [seed, vals] : by_seed) {
    (void)seed;
    out.push_back(median(vals));
  }
  return out;
}

SweepResult horizon_sweep(const Dataset& ds, const std::string& target_id,
                          const std::vector<std::string>& ranked_detectors,
                          const std::vector<int>& sizes, const std::vector<int>& horizons,
                          const tcn::TcnConfig& tcn_cfg, const tcn::TrainConfig& train_cfg,
                          const std::vector<std::uint64_t>& seeds, int history_steps,
                          int stride_steps, int threads) {
  if (horizons.empty() || sizes.empty() || seeds.empty())
    throw ConfigError("horizon sweep needs sizes, horizons and seeds");
  if (!std::is_sorted(horizons.begin(), horizons.end()))
    throw ConfigError("horizons must be sorted ascending");
  const int max_h = horizons.back();
  for (int s : sizes)
    if (s < 0 || s > static_cast<int>(ranked_detectors.size()))
      throw ConfigError("network size " + std::to_string(s) + " exceeds candidate list");

  struct Job {
    int size_idx;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t si = 0; si < sizes.size(); ++si)
    for (std::uint64_t seed : seeds) jobs.push_back({static_cast<int>(si), seed});

  std::vector<Eigen::VectorXd> per_horizon(jobs.size());
  parallel_for(static_cast<std::int64_t>(jobs.size()), threads, [&](std::int64_t j) {
    const Job& job = jobs[static_cast<std::size_t>(j)];
    std::vector<std::string> detectors(
        ranked_detectors.begin(),
        ranked_detectors.begin() + sizes[static_cast<std::size_t>(job.size_idx)]);
    ForecastTask task{target_id, detectors, history_steps, max_h, stride_steps};
    tcn::TcnConfig tc = tcn_cfg;
    tc.seed = job.seed;
    tcn::TrainConfig tr = train_cfg;
    tr.seed = job.seed;
    const RunOutput run = train_and_evaluate(ds, task, tc, tr, 1);
    per_horizon[static_cast<std::size_t>(j)] = run.report.per_horizon_rmse;
  });

  SweepResult result;
  result.sizes = sizes;
  result.horizons = horizons;
  result.median_rmse.resize(static_cast<Eigen::Index>(sizes.size()),
                            static_cast<Eigen::Index>(horizons.size()));
  for (std::size_t si = 0; si < sizes.size(); ++si) {
    for (std::size_t hi = 0; hi < horizons.size(); ++hi) {
      std::vector<double> vals;
      for (std::size_t j = 0; j < jobs.size(); ++j) {
        if (jobs[j].size_idx != static_cast<int>(si)) continue;
        const double rm = per_horizon[j][horizons[hi] - 1];
        result.rows.push_back({sizes[si], horizons[hi], jobs[j].seed, rm});
        vals.push_back(rm);
      }
      result.median_rmse(static_cast<Eigen::Index>(si), static_cast<Eigen::Index>(hi)) =
          median(vals);
    }
  }
  for (std::size_t hi = 0; hi < horizons.size(); ++hi) {
    Eigen::Index best = 0;
    result.median_rmse.col(static_cast<Eigen::Index>(hi)).minCoeff(&best);
    result.argmin_size_per_horizon.push_back(sizes[static_cast<std::size_t>(best)]);
  }
  return result;
}

tcn::TcnConfig realtime_tcn_config() {
  tcn::TcnConfig cfg;
  cfg.kernel_size = 3;
  cfg.dilations = {1, 3, 9};
  cfg.n_stacks = 1;
  cfg.n_filters = 64;
  cfg.use_residual = true;
  cfg.use_skip = true;
  cfg.seq2seq = false;
  return cfg;
}

}  // namespace cloudlead::forecast
