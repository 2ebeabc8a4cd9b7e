#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cloudlead/core.hpp"

namespace cloudlead::sim {

// Synthetic multi-site generator. A smoothed Gaussian random field is frozen
// per day and advected across the site layout at the configured wind, so
// site-to-site lead times are known exactly from geometry.
struct SimConfig {
  std::vector<SiteMeta> sites;
  Eigen::Vector2d wind_kmh{16.0, 0.0};
  double corr_length_km = 5.0;   // along-wind correlation length of the field
  double corr_aspect = 40.0;     // cross-wind elongation factor (banded clouds)
  double coverage = 0.5;         // mean cloud cover fraction in [0,1]
  double coverage_jitter = 0.6;  // per-day relative spread of the cover draw
  double coarse_mix = 0.45;      // weight of a 4x-scale component; breaks
                                 // the quasi-periodic band spacing of a
                                 // single-scale Gaussian field
  double depth = 0.2;            // transmissivity floor in [0,1)
  double edge_softness = 0.012;  // squashing softness; smaller = sharper edges
  double puff_coverage = 0.10;   // cover fraction of a second, isotropic layer
  double puff_size_km = 4.0;     // correlation length of that layer
  double noise_sd = 0.0;         // additive measurement noise
  double decorrelation_per_h = 0.0;  // 0 = frozen field (exact lag oracle)
  int n_days = 120;
  int step_minutes = 5;
  double cloudy_day_prob = 0.5;
  std::uint64_t seed = 1;
  Date start_date{std::chrono::year{2020}, std::chrono::month{1}, std::chrono::day{1}};
  double cell_km = 0.5;              // along-wind field resolution
  std::int64_t max_field_cells = 16'000'000;

  void validate() const;

  // 4x4 grid, 8 km spacing, wind due east. Row coordinates carry a fixed
  // +-2 km jitter so no two sites share the exact same advection transect.
  static SimConfig desk_default();
};

std::string to_json(const SimConfig& cfg);
SimConfig sim_config_from_json(const std::string& text);

struct GroundTruth {
  std::vector<SiteMeta> sites;
  Eigen::Vector2d wind_kmh;

  // Signed hours by which `from` observes the advected field before `to`.
  double lead_hours(const SiteMeta& from, const SiteMeta& to) const;
  double lead_hours(int from, int to) const { return lead_hours(sites[from], sites[to]); }
  double lead_steps(int from, int to, int step_minutes) const {
    return lead_hours(from, to) * 60.0 / step_minutes;
  }
};

// Raised-cosine daylight bell: zero outside [M/4, 3M/4], peak 1 at index M/2,
// mirror-symmetric about solar noon.
Eigen::VectorXd clear_sky_profile(int steps_per_day);

std::pair<Dataset, GroundTruth> simulate(const SimConfig& cfg, int threads = 1);

std::string ground_truth_to_json(const GroundTruth& gt);

}  // namespace cloudlead::sim
