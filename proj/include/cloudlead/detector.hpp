#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "cloudlead/core.hpp"
#include "cloudlead/events.hpp"

namespace cloudlead::detector {

// The six correlation scenarios for one (detector, target) day.
enum class Scenario : int {
  kIgnored = 1,        // clear / clear
  kWrongDetect = 2,    // detector cloudy, target clear
  kMissClear = 3,      // detector clear, target cloudy
  kMissLagging = 4,    // both cloudy, lead <= 0
  kDetected = 5,       // both cloudy, 0 < lead <= t_thre
  kIrrelevant = 6,     // both cloudy, lead > t_thre
};

inline int scenario_id(Scenario s) { return static_cast<int>(s); }

struct PairDayRecord {
  int day = 0;
  Scenario scenario = Scenario::kIgnored;
  int delta_t_max = 0;
  double pcc_max = 0.0;
  bool defined = false;
};

// Per-day lag/correlation tables for one target against every other site.
// candidate_cloudy(d, j) / target_cloudy(d) hold the day cloudiness flags
// (a day is cloudy for a site when its event series has a nonzero entry).
struct CorrelationTables {
  std::string target_id;
  std::vector<std::string> candidate_ids;  // dataset order, target excluded
  Eigen::MatrixXi lags;                    // D x (N-1), delta_t_max
  Eigen::MatrixXd pccs;                    // D x (N-1), pcc at optimal shift
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> defined;          // D x (N-1)
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> candidate_cloudy; // D x (N-1)
  Eigen::Array<bool, Eigen::Dynamic, 1> target_cloudy;                 // D
  int t_shift = 24;
  double dx = 0.3;

  int n_days() const { return static_cast<int>(lags.rows()); }
  int n_candidates() const { return static_cast<int>(lags.cols()); }
};

struct DetectorNetwork {
  std::string target_id;
  std::vector<std::string> member_ids;  // in selection order
  double phi = 0.0;
  std::vector<double> phi_curve;  // phi after each addition of the first greedy pass
  int iterations = 0;
};

Scenario classify_pair_day(bool detector_cloudy, bool target_cloudy,
                           const events::LagCorrResult& lag, int t_thre);

// phi = #detected / #(anything but ignored); throws when no day is evaluable.
double detection_rate(const std::vector<Scenario>& scenarios);

// Network-level day label: detected wins over irrelevant wins over lagging;
// one cloudy member is enough to wrongly detect on a clear target day.
Scenario network_day_scenario(const std::vector<PairDayRecord>& member_records,
                              bool target_cloudy, int t_thre);

CorrelationTables build_tables(const Dataset& ds, const std::string& target_id, double dx,
                               int t_shift, int threads = 1);

// phi of an explicit member set (indices into candidate_ids).
double network_phi(const CorrelationTables& tables, const std::vector<int>& members,
                   int t_thre);

// Candidates in descending mean pcc over the days where both sites are
// cloudy; candidates with no such day rank last. Ties break by column order.
std::vector<int> rank_candidates(const CorrelationTables& tables);

DetectorNetwork select_detectors(const CorrelationTables& tables, int t_thre,
                                 int max_iterations = 20);

struct BruteForceResult {
  std::vector<std::string> member_ids;  // sorted by id
  double phi = 0.0;
};

// Exhaustive maximum of phi over all non-empty candidate subsets.
BruteForceResult brute_force_select(const CorrelationTables& tables, int t_thre,
                                    int max_candidates = 16);

}  // namespace cloudlead::detector
