#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "cloudlead/core.hpp"
#include "cloudlead/detector.hpp"
#include "cloudlead/metrics.hpp"
#include "cloudlead/tcn.hpp"

namespace cloudlead::forecast {

enum class AblationMode { kSelected, kSingle, kAll, kRandom };

std::string mode_name(AblationMode m);
AblationMode mode_from_name(const std::string& s);

struct ForecastTask {
  std::string target_id;
  std::vector<std::string> detector_ids;  // empty for single-site mode
  int history_steps = 288;
  int horizon_steps = 12;
  int stride_steps = 12;
};

// Sliding windows split chronologically by day into 70/20/10; a window
// belongs to a split only when input and horizon both lie inside it, so no
// sample spans a boundary and test targets sit strictly after training data.
struct SplitSamples {
  std::vector<tcn::TrainSample> train, val, test;
  std::vector<Eigen::Index> train_end, val_end, test_end;  // absolute last input step
  std::vector<std::string> channel_ids;                    // target first, then by distance
  Eigen::Index train_step_end = 0, val_step_end = 0;       // split boundaries in steps
};

SplitSamples assemble_samples(const Dataset& ds, const ForecastTask& task);

// Closed-form count of stride windows fitting in [0, steps) for given
// history/horizon (no split or daylight filtering).
Eigen::Index window_count(Eigen::Index steps, int history, int horizon, int stride);

// Clear-sky-index persistence: the last observed index is held constant and
// re-applied to the future clear-sky curve. value_hold repeats the last
// observation instead.
Eigen::VectorXd persistence_forecast(const Eigen::Ref<const Eigen::VectorXd>& history,
                                     Eigen::Index window_end_abs, int steps_per_day,
                                     int horizon, bool value_hold = false);

struct EvalReport {
  double rmse = 0.0;
  double bias = 0.0;
  Eigen::VectorXd per_horizon_rmse;
  std::int64_t n_samples = 0;
  Quartiles sample_rmse;  // distribution of per-window RMSE
};

// pred/truth are horizon x n_windows.
EvalReport evaluate(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth);

struct RunOutput {
  EvalReport report;
  Eigen::MatrixXd pred, truth;           // horizon x n_test
  std::vector<Eigen::Index> window_end;  // per test window
  tcn::TrainResult train_result;
  std::vector<std::string> channel_ids;
};

// Train on the task's train split, return predictions over the test split.
// tcn_cfg's channel/output dims are overridden from the task.
RunOutput train_and_evaluate(const Dataset& ds, const ForecastTask& task,
                             tcn::TcnConfig tcn_cfg, const tcn::TrainConfig& train_cfg,
                             int threads = 1);

struct AblationRow {
  AblationMode mode;
  std::uint64_t seed = 0;
  int draw = 0;  // random mode only
  double rmse = 0.0;
  double bias = 0.0;
  double rmse_cloudy = 0.0;             // test windows on cloudy target days
  double persistence_rmse = 0.0;        // same test windows
  double persistence_rmse_cloudy = 0.0;
};

struct AblationConfig {
  tcn::TcnConfig tcn;
  tcn::TrainConfig train;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  int history_steps = 288;
  int horizon_steps = 12;
  int stride_steps = 12;
  int n_random_draws = 10;
  double dx = 0.3;  // cloudy-day flag threshold for the cloudy-subset metrics
  int threads = 1;
};

// The four training regimes (selected / single / all / random) on identical
// splits; random mode re-draws |selected| sites per (seed, draw).
std::vector<AblationRow> run_ablation(const Dataset& ds,
                                      const detector::DetectorNetwork& network,
                                      const AblationConfig& cfg);

// Median per-seed RMSE for one mode (random collapses draws per seed first).
std::vector<double> per_seed_rmse(const std::vector<AblationRow>& rows, AblationMode mode);

struct SweepRow {
  int network_size = 0;
  int horizon_steps = 0;
  std::uint64_t seed = 0;
  double rmse = 0.0;
};

struct SweepResult {
  std::vector<int> sizes;
  std::vector<int> horizons;
  std::vector<SweepRow> rows;
  // median-over-seeds RMSE, sizes x horizons
  Eigen::MatrixXd median_rmse;
  std::vector<int> argmin_size_per_horizon;
};

// One model per (size, seed) with out_dim = max horizon; per-horizon RMSE
// read off the same model, so a sweep costs sizes x seeds trainings.
SweepResult horizon_sweep(const Dataset& ds, const std::string& target_id,
                          const std::vector<std::string>& ranked_detectors,
                          const std::vector<int>& sizes, const std::vector<int>& horizons,
                          const tcn::TcnConfig& tcn_cfg, const tcn::TrainConfig& train_cfg,
                          const std::vector<std::uint64_t>& seeds, int history_steps,
                          int stride_steps, int threads = 1);

// Intra-hour model of the real-time stage: kernel 3, dilations [1,3,9],
// one stack, 64 filters.
tcn::TcnConfig realtime_tcn_config();

}  // namespace cloudlead::forecast
