#include "cloudlead/blend.hpp"

#include <json.hpp>

#include "cloudlead/rng.hpp"
#include "cloudlead/sim.hpp"

namespace cloudlead::blend {

using nlohmann::json;

void NwpSourceConfig::validate() const {
  if (name.empty()) throw ConfigError("source needs a name");
  if (granularity_h < 1 || 24 % granularity_h != 0)
    throw ConfigError("source '" + name + "': granularity_h must divide 24");
  if (smooth_h < 0.0) throw ConfigError("source '" + name + "': smooth_h must be >= 0");
  if (noise_sd < 0.0) throw ConfigError("source '" + name + "': noise_sd must be >= 0");
  if (horizon_h < 1) throw ConfigError("source '" + name + "': horizon_h must be >= 1");
}

std::vector<NwpSourceConfig> sources_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("sources config: " + std::string(e.what()));
  }
  std::vector<NwpSourceConfig> out;
  try {
    for (const auto& s : j) {
      NwpSourceConfig cfg;
      cfg.name = s.at("name").get<std::string>();
      if (s.contains("granularity_h")) cfg.granularity_h = s["granularity_h"].get<int>();
      if (s.contains("bias")) cfg.bias = s["bias"].get<double>();
      if (s.contains("smooth_h")) cfg.smooth_h = s["smooth_h"].get<double>();
      if (s.contains("noise_sd")) cfg.noise_sd = s["noise_sd"].get<double>();
      if (s.contains("horizon_h")) cfg.horizon_h = s["horizon_h"].get<int>();
      if (s.contains("seed")) cfg.seed = s["seed"].get<std::uint64_t>();
      cfg.validate();
      out.push_back(std::move(cfg));
    }
  } catch (const json::exception& e) {
    throw ConfigError("sources config: " + std::string(e.what()));
  }
  if (out.empty()) throw ConfigError("sources config lists no sources");
  return out;
}

std::string sources_to_json(const std::vector<NwpSourceConfig>& sources) {
  json arr = json::array();
  for (const auto& s : sources)
    arr.push_back(json{{"name", s.name},
                       {"granularity_h", s.granularity_h},
                       {"bias", s.bias},
                       {"smooth_h", s.smooth_h},
                       {"noise_sd", s.noise_sd},
                       {"horizon_h", s.horizon_h},
                       {"seed", s.seed}});
  return arr.dump(2) + "\n";
}

std::vector<NwpSourceConfig> default_source_suite() {
  return {
      {"dense_biased", 1, 0.08, 0.0, 0.10, 48, 11},
      {"coarse_3h", 3, 0.02, 1.0, 0.08, 96, 12},
      {"smoothed", 1, 0.05, 3.0, 0.09, 96, 13},
      {"calibrated", 1, 0.005, 0.0, 0.06, 36, 14},
      {"noisy", 1, -0.06, 1.0, 0.12, 24, 15},
  };
}

Eigen::VectorXd synth_nwp(const Eigen::Ref<const Eigen::VectorXd>& truth_hourly,
                          const NwpSourceConfig& cfg) {
  cfg.validate();
  const Eigen::Index T = truth_hourly.size();
  Eigen::VectorXd x = truth_hourly;

  const int half = static_cast<int>(std::lround(cfg.smooth_h));
  if (half > 0) {
    Eigen::VectorXd sm(T);
    for (Eigen::Index t = 0; t < T; ++t) {
      const Eigen::Index lo = std::max<Eigen::Index>(0, t - half);
      const Eigen::Index hi = std::min<Eigen::Index>(T - 1, t + half);
      sm[t] = x.segment(lo, hi - lo + 1).mean();
    }
    x = sm;
  }

  x.array() += cfg.bias;

  if (cfg.granularity_h > 1) {
    const int g = cfg.granularity_h;
    Eigen::VectorXd up(T);
    for (Eigen::Index t = 0; t < T; ++t) {
      const Eigen::Index k0 = (t / g) * g;
      const Eigen::Index k1 = k0 + g;
      if (k1 >= T) {
        up[t] = x[k0];
      } else {
        const double frac = static_cast<double>(t - k0) / g;
        up[t] = x[k0] * (1.0 - frac) + x[k1] * frac;
      }
    }
    x = up;
  }

  if (cfg.noise_sd > 0.0) {
    Rng rng(splitmix64(cfg.seed ^ 0x5A0B1C2DULL));
    for (Eigen::Index t = 0; t < T; ++t) x[t] += cfg.noise_sd * rng.normal();
  }

  return x.cwiseMax(0.0).cwiseMin(1.0);
}

BlendMetrics blend_evaluate(const Eigen::Ref<const Eigen::VectorXd>& pred,
                            const Eigen::Ref<const Eigen::VectorXd>& truth) {
  if (pred.size() != truth.size()) throw ConfigError("blend_evaluate: length mismatch");
  if (pred.size() == 0) throw ConfigError("blend_evaluate: empty input");
  const Eigen::ArrayXd err = (pred - truth).array();
  return {std::sqrt(err.square().mean()), err.mean()};
}

BlendMetrics blend_evaluate(const Eigen::Ref<const Eigen::VectorXd>& pred,
                            const Eigen::Ref<const Eigen::VectorXd>& truth,
                            const Eigen::Ref<const Eigen::VectorXd>& mask) {
  if (pred.size() != truth.size() || pred.size() != mask.size())
    throw ConfigError("blend_evaluate: length mismatch");
  double se = 0.0, e = 0.0;
  Eigen::Index n = 0;
  for (Eigen::Index t = 0; t < pred.size(); ++t) {
    if (mask[t] == 0.0) continue;
    const double d = pred[t] - truth[t];
    se += d * d;
    e += d;
    ++n;
  }
  if (n == 0) throw ConfigError("blend_evaluate: mask selects no hours");
  return {std::sqrt(se / n), e / n};
}

LinearBlend linear_blend_baseline(const Eigen::MatrixXd& sources,
                                  const Eigen::Ref<const Eigen::VectorXd>& truth,
                                  const std::vector<Eigen::Index>& fit_hours) {
  const Eigen::Index S = sources.rows();
  if (truth.size() != sources.cols()) throw ConfigError("baseline: length mismatch");
  if (fit_hours.empty()) throw ConfigError("baseline: no fit hours");
  Eigen::MatrixXd X(static_cast<Eigen::Index>(fit_hours.size()), S + 1);
  Eigen::VectorXd y(static_cast<Eigen::Index>(fit_hours.size()));
  for (std::size_t i = 0; i < fit_hours.size(); ++i) {
    X(static_cast<Eigen::Index>(i), 0) = 1.0;
    X.row(static_cast<Eigen::Index>(i)).tail(S) = sources.col(fit_hours[i]).transpose();
    y[static_cast<Eigen::Index>(i)] = truth[fit_hours[i]];
  }
  const Eigen::VectorXd w = X.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(y);
  LinearBlend lb;
  lb.intercept = w[0];
  lb.weights = w.tail(S);
  return lb;
}

Eigen::VectorXd linear_blend_predict(const LinearBlend& lb, const Eigen::MatrixXd& sources) {
  if (lb.weights.size() != sources.rows()) throw ConfigError("baseline: source count mismatch");
  return (sources.transpose() * lb.weights).array() + lb.intercept;
}

tcn::TcnConfig blender_tcn_config(int n_sources) {
  tcn::TcnConfig cfg;
  cfg.kernel_size = 2;
  cfg.dilations = {1, 2};
  cfg.n_stacks = 3;
  cfg.n_filters = 32;
  cfg.in_channels = n_sources;
  cfg.out_dim = 1;
  cfg.seq2seq = true;
  cfg.use_residual = true;
  cfg.use_skip = true;
  return cfg;
}

tcn::TrainConfig blender_train_config() {
  tcn::TrainConfig cfg;
  cfg.epochs = 20;
  cfg.batch_size = 16;
  cfg.learning_rate = 5e-3;
  return cfg;
}

BlendReport run_blend(const Eigen::Ref<const Eigen::VectorXd>& truth_hourly,
                      const std::vector<NwpSourceConfig>& source_cfgs,
                      const tcn::TcnConfig& tcn_cfg, const tcn::TrainConfig& train_cfg,
                      Eigen::Index split_hour, int window_h, int stride_h, int threads) {
  const Eigen::Index T = truth_hourly.size();
  const auto S = static_cast<Eigen::Index>(source_cfgs.size());
  if (S < 2) throw ConfigError("blending needs at least 2 sources");
  if (split_hour <= window_h || split_hour >= T)
    throw ConfigError("split_hour must leave room for training windows and a test range");
  if (tcn_cfg.in_channels != S) throw ConfigError("tcn in_channels must equal source count");
  if (!tcn_cfg.seq2seq || tcn_cfg.out_dim != 1)
    throw ConfigError("blender must be a seq2seq single-output model");

  Eigen::MatrixXd sources(S, T);
  for (Eigen::Index s = 0; s < S; ++s)
    sources.row(s) = synth_nwp(truth_hourly, source_cfgs[s]).transpose();

  // Daylight mask from the clear-sky bell; nights trivially score 0.
  const Eigen::VectorXd bell_hourly = resample_hourly(sim::clear_sky_profile(288), 5);
  Eigen::VectorXd mask(T);
  for (Eigen::Index t = 0; t < T; ++t) mask[t] = bell_hourly[t % 24] > 0.0 ? 1.0 : 0.0;

  std::vector<tcn::TrainSample> train_windows;
  for (Eigen::Index begin = 0; begin + window_h <= split_hour; begin += stride_h) {
    tcn::TrainSample w;
    w.input = sources.middleCols(begin, window_h);
    w.target = truth_hourly.segment(begin, window_h).transpose();
    train_windows.push_back(std::move(w));
  }
  if (train_windows.empty()) throw ConfigError("no training windows before split_hour");

  tcn::Tcn<double> model(tcn_cfg);
  tcn::train(model, train_windows, {}, train_cfg, threads);

  BlendReport report;
  report.test_begin = split_hour;
  // One forward over the whole record; causal structure means the test span
  // sees full context without any leakage from later inputs.
  report.tcn_prediction = model.forward(sources).row(0).transpose();

  std::vector<Eigen::Index> fit_hours;
  for (Eigen::Index t = 0; t < split_hour; ++t)
    if (mask[t] != 0.0) fit_hours.push_back(t);
  const LinearBlend lb = linear_blend_baseline(sources, truth_hourly, fit_hours);
  report.baseline_prediction = linear_blend_predict(lb, sources);

  const Eigen::Index n_test = T - split_hour;
  const auto test = [&](const Eigen::VectorXd& pred) {
    return blend_evaluate(pred.tail(n_test), truth_hourly.tail(n_test), mask.tail(n_test));
  };
  for (Eigen::Index s = 0; s < S; ++s) {
    const BlendMetrics m = test(sources.row(s).transpose());
    report.sources.push_back({source_cfgs[s].name, m.rmse, m.bias});
  }
  const BlendMetrics mb = test(report.baseline_prediction);
  report.baseline = {"least_squares", mb.rmse, mb.bias};
  const BlendMetrics mt = test(report.tcn_prediction);
  report.tcn = {"tcn", mt.rmse, mt.bias};
  return report;
}

}  // namespace cloudlead::blend
