#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "cloudlead/core.hpp"
#include "cloudlead/tcn.hpp"

namespace cloudlead::blend {

// One synthetic forecast product: the hourly truth degraded by smoothing,
// a constant bias, optional coarse granularity and additive noise.
struct NwpSourceConfig {
  std::string name;
  int granularity_h = 1;  // must divide 24
  double bias = 0.0;
  double smooth_h = 0.0;  // centered moving-average halfwidth, hours
  double noise_sd = 0.0;
  int horizon_h = 48;
  std::uint64_t seed = 0;

  void validate() const;
};

std::vector<NwpSourceConfig> sources_from_json(const std::string& text);
std::string sources_to_json(const std::vector<NwpSourceConfig>& sources);

// Five products with distinct bias/noise/resolution signatures.
std::vector<NwpSourceConfig> default_source_suite();

Eigen::VectorXd synth_nwp(const Eigen::Ref<const Eigen::VectorXd>& truth_hourly,
                          const NwpSourceConfig& cfg);

struct BlendMetrics {
  double rmse = 0.0;
  double bias = 0.0;
};

BlendMetrics blend_evaluate(const Eigen::Ref<const Eigen::VectorXd>& pred,
                            const Eigen::Ref<const Eigen::VectorXd>& truth);
// Masked variant; only hours with mask != 0 participate.
BlendMetrics blend_evaluate(const Eigen::Ref<const Eigen::VectorXd>& pred,
                            const Eigen::Ref<const Eigen::VectorXd>& truth,
                            const Eigen::Ref<const Eigen::VectorXd>& mask);

// Pointwise ordinary least squares over the fit hours; rank deficiency falls
// back to the minimum-norm solution (SVD).
struct LinearBlend {
  Eigen::VectorXd weights;  // one per source
  double intercept = 0.0;
};

LinearBlend linear_blend_baseline(const Eigen::MatrixXd& sources,  // S x T
                                  const Eigen::Ref<const Eigen::VectorXd>& truth,
                                  const std::vector<Eigen::Index>& fit_hours);
Eigen::VectorXd linear_blend_predict(const LinearBlend& lb, const Eigen::MatrixXd& sources);

// Sequence-to-sequence blender configuration (kernel 2, dilations [1,2],
// 3 stacks, 32 filters) and its training defaults (20 epochs, batch 16).
tcn::TcnConfig blender_tcn_config(int n_sources);
tcn::TrainConfig blender_train_config();

struct BlendReport {
  struct Entry {
    std::string name;
    double rmse = 0.0;
    double bias = 0.0;
  };
  std::vector<Entry> sources;
  Entry baseline;
  Entry tcn;
  Eigen::VectorXd tcn_prediction;      // full hourly series
  Eigen::VectorXd baseline_prediction;
  Eigen::Index test_begin = 0;  // first test hour
};

// Full day-ahead experiment on one site's hourly truth: synthesize sources,
// train the blender on [0, split_hour) windows, evaluate everything on the
// daylight hours of [split_hour, end).
BlendReport run_blend(const Eigen::Ref<const Eigen::VectorXd>& truth_hourly,
                      const std::vector<NwpSourceConfig>& sources,
                      const tcn::TcnConfig& tcn_cfg, const tcn::TrainConfig& train_cfg,
                      Eigen::Index split_hour, int window_h = 48, int stride_h = 24,
                      int threads = 1);

}  // namespace cloudlead::blend
