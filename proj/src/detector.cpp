#include "cloudlead/detector.hpp"

#include <algorithm>
#include <set>

#include "cloudlead/parallel.hpp"

namespace cloudlead::detector {

Scenario classify_pair_day(bool detector_cloudy, bool target_cloudy,
                           const events::LagCorrResult& lag, int t_thre) {
  if (t_thre < 1) throw ConfigError("t_thre must be >= 1");
  if (!detector_cloudy && !target_cloudy) return Scenario::kIgnored;
  if (detector_cloudy && !target_cloudy) return Scenario::kWrongDetect;
  if (!detector_cloudy && target_cloudy) return Scenario::kMissClear;
  if (lag.delta_t_max <= 0) return Scenario::kMissLagging;
  return lag.delta_t_max <= t_thre ? Scenario::kDetected : Scenario::kIrrelevant;
}

double detection_rate(const std::vector<Scenario>& scenarios) {
  int detected = 0, evaluable = 0;
  for (Scenario s : scenarios) {
    if (s == Scenario::kIgnored) continue;
    ++evaluable;
    if (s == Scenario::kDetected) ++detected;
  }
  if (evaluable == 0) throw DataError("no evaluable days: every day is clear/clear");
  return static_cast<double>(detected) / evaluable;
}

Scenario network_day_scenario(const std::vector<PairDayRecord>& member_records,
                              bool target_cloudy, int t_thre) {
  if (member_records.empty()) throw ConfigError("network needs at least one member");
  (void)t_thre;  // already folded into the member scenarios
  if (!target_cloudy) {
    for (const auto& r : member_records)
      if (r.scenario == Scenario::kWrongDetect) return Scenario::kWrongDetect;
    return Scenario::kIgnored;
  }
  bool any_irrelevant = false, all_clear = true;
  for (const auto& r : member_records) {
    if (r.scenario == Scenario::kDetected) return Scenario::kDetected;
    if (r.scenario == Scenario::kIrrelevant) any_irrelevant = true;
    if (r.scenario != Scenario::kMissClear) all_clear = false;
  }
  if (all_clear) return Scenario::kMissClear;
  return any_irrelevant ? Scenario::kIrrelevant : Scenario::kMissLagging;
}

CorrelationTables build_tables(const Dataset& ds, const std::string& target_id, double dx,
                               int t_shift, int threads) {
  const int target = ds.site_index(target_id);
  if (target < 0) throw ConfigError("unknown target site '" + target_id + "'");
  if (ds.n_sites() < 2) throw DataError("need at least 2 sites");

  CorrelationTables tables;
  tables.target_id = target_id;
  tables.dx = dx;
  tables.t_shift = t_shift;
  for (int i = 0; i < ds.n_sites(); ++i)
    if (i != target) tables.candidate_ids.push_back(ds.sites[i].id);

  const int D = ds.n_days;
  const int K = static_cast<int>(tables.candidate_ids.size());
  tables.lags.setZero(D, K);
  tables.pccs.setZero(D, K);
  tables.defined.setConstant(D, K, false);
  tables.candidate_cloudy.setConstant(D, K, false);
  tables.target_cloudy.setConstant(D, false);

  std::vector<int> candidate_site(K);
  {
    int k = 0;
    for (int i = 0; i < ds.n_sites(); ++i)
      if (i != target) candidate_site[k++] = i;
  }

  parallel_for(D, threads, [&](std::int64_t d) {
    const auto day = static_cast<int>(d);
    const events::EventSeries target_events =
        events::extract_events(ds.day_values(target, day), dx);
    tables.target_cloudy(day) = target_events.any();
    for (int k = 0; k < K; ++k) {
      const events::EventSeries cand_events =
          events::extract_events(ds.day_values(candidate_site[k], day), dx);
      tables.candidate_cloudy(day, k) = cand_events.any();
      const auto lag = events::lagged_correlation(target_events, cand_events, t_shift);
      tables.lags(day, k) = lag.delta_t_max;
      tables.pccs(day, k) = lag.pcc_max;
      tables.defined(day, k) = lag.defined;
    }
  });
  return tables;
}

namespace {

// Pair scenarios for a fixed t_thre, reused across the many phi evaluations
// of greedy / exhaustive selection.
struct ScenarioGrid {
  std::vector<Scenario> grid;  // D x K, day-major
  int days = 0, cands = 0;
  Scenario at(int d, int k) const { return grid[static_cast<std::size_t>(d) * cands + k]; }
};

ScenarioGrid make_grid(const CorrelationTables& t, int t_thre) {
  ScenarioGrid g;
  g.days = t.n_days();
  g.cands = t.n_candidates();
  g.grid.resize(static_cast<std::size_t>(g.days) * g.cands);
  for (int d = 0; d < g.days; ++d)
    for (int k = 0; k < g.cands; ++k) {
      events::LagCorrResult lag{t.lags(d, k), t.pccs(d, k), t.defined(d, k)};
      g.grid[static_cast<std::size_t>(d) * g.cands + k] =
          classify_pair_day(t.candidate_cloudy(d, k), t.target_cloudy(d), lag, t_thre);
    }
  return g;
}

double phi_from_grid(const CorrelationTables& t, const ScenarioGrid& g,
                     const std::vector<int>& members) {
  if (members.empty()) throw ConfigError("network needs at least one member");
  int detected = 0, evaluable = 0;
  for (int d = 0; d < g.days; ++d) {
    Scenario day_label;
    if (!t.target_cloudy(d)) {
      day_label = Scenario::kIgnored;
      for (int m : members)
        if (g.at(d, m) == Scenario::kWrongDetect) {
          day_label = Scenario::kWrongDetect;
          break;
        }
    } else {
      day_label = Scenario::kMissClear;
      bool any_irrelevant = false, any_lagging = false;
      for (int m : members) {
        const Scenario s = g.at(d, m);
        if (s == Scenario::kDetected) {
          day_label = Scenario::kDetected;
          break;
        }
        if (s == Scenario::kIrrelevant) any_irrelevant = true;
        if (s == Scenario::kMissLagging) any_lagging = true;
      }
      if (day_label != Scenario::kDetected && (any_irrelevant || any_lagging))
        day_label = any_irrelevant ? Scenario::kIrrelevant : Scenario::kMissLagging;
    }
    if (day_label == Scenario::kIgnored) continue;
    ++evaluable;
    if (day_label == Scenario::kDetected) ++detected;
  }
  if (evaluable == 0) throw DataError("no evaluable days for this member set");
  return static_cast<double>(detected) / evaluable;
}

}  // namespace

double network_phi(const CorrelationTables& tables, const std::vector<int>& members,
                   int t_thre) {
  const ScenarioGrid g = make_grid(tables, t_thre);
  return phi_from_grid(tables, g, members);
}

std::vector<int> rank_candidates(const CorrelationTables& tables) {
  const int K = tables.n_candidates();
  std::vector<double> mean_pcc(K, -2.0);  // below any real pcc: never-cloudy pairs rank last
  for (int k = 0; k < K; ++k) {
    double sum = 0.0;
    int count = 0;
    for (int d = 0; d < tables.n_days(); ++d)
      if (tables.candidate_cloudy(d, k) && tables.target_cloudy(d)) {
        sum += tables.pccs(d, k);
        ++count;
      }
    if (count > 0) mean_pcc[k] = sum / count;
  }
  std::vector<int> order(K);
  for (int k = 0; k < K; ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return mean_pcc[a] > mean_pcc[b]; });
  return order;
}

DetectorNetwork select_detectors(const CorrelationTables& tables, int t_thre,
                                 int max_iterations) {
  if (tables.n_candidates() < 1) throw ConfigError("no candidate sites");
  const ScenarioGrid grid = make_grid(tables, t_thre);

  DetectorNetwork net;
  net.target_id = tables.target_id;
  double best_phi = -1.0;
  std::vector<int> best_members;
  std::set<int> excluded;

  int iter = 0;
  while (iter < max_iterations) {
    ++iter;
    std::vector<int> ranked;
    for (int k : rank_candidates(tables))
      if (!excluded.count(k)) ranked.push_back(k);
    if (ranked.empty()) break;

    // Formulation: grow the prefix in rank order, keep the first phi maximum.
    std::vector<int> prefix;
    std::vector<double> phis;
    for (int k : ranked) {
      prefix.push_back(k);
      phis.push_back(phi_from_grid(tables, grid, prefix));
    }
    if (iter == 1) net.phi_curve = phis;
    int best_k = 0;
    for (int i = 1; i < static_cast<int>(phis.size()); ++i)
      if (phis[i] > phis[best_k]) best_k = i;
    std::vector<int> opt(ranked.begin(), ranked.begin() + best_k + 1);
    const double phi_opt = phis[best_k];
    if (phi_opt > best_phi) {
      best_phi = phi_opt;
      best_members = opt;
    }

    // Refinement: the first member whose removal does not cost any phi is
    // excluded for good, then the prefix is rebuilt from what remains.
    // Accepting ties (>=) prunes members that never contribute a detection;
    // a member survives only when dropping it strictly lowers phi.
    bool changed = false;
    if (opt.size() >= 2) {
      for (std::size_t k = 0; k < opt.size(); ++k) {
        std::vector<int> without;
        for (std::size_t j = 0; j < opt.size(); ++j)
          if (j != k) without.push_back(opt[j]);
        const double phi_wo = phi_from_grid(tables, grid, without);
        if (phi_wo >= phi_opt) {
          excluded.insert(opt[k]);
          if (phi_wo > best_phi) {
            best_phi = phi_wo;
            best_members = without;
          } else if (phi_wo == best_phi && without.size() < best_members.size()) {
            best_members = without;
          }
          changed = true;
          break;
        }
      }
    }
    if (!changed) break;
  }

  if (best_members.empty()) throw DataError("selection found no evaluable member set");
  net.phi = best_phi;
  net.iterations = iter;
  for (int k : best_members) net.member_ids.push_back(tables.candidate_ids[k]);
  return net;
}

BruteForceResult brute_force_select(const CorrelationTables& tables, int t_thre,
                                    int max_candidates) {
  const int K = tables.n_candidates();
  if (K > max_candidates)
    throw ConfigError("brute force limited to " + std::to_string(max_candidates) +
                      " candidates, got " + std::to_string(K));
  const ScenarioGrid grid = make_grid(tables, t_thre);

  double best_phi = -1.0;
  std::vector<std::string> best_ids;
  bool found = false;
  for (std::uint32_t mask = 1; mask < (1u << K); ++mask) {
    std::vector<int> members;
    for (int k = 0; k < K; ++k)
      if (mask & (1u << k)) members.push_back(k);
    double phi;
    try {
      phi = phi_from_grid(tables, grid, members);
    } catch (const DataError&) {
      continue;  // subset with no evaluable day
    }
    std::vector<std::string> ids;
    for (int k : members) ids.push_back(tables.candidate_ids[k]);
    std::sort(ids.begin(), ids.end());
    const bool better = !found || phi > best_phi ||
                        (phi == best_phi && (ids.size() < best_ids.size() ||
                                             (ids.size() == best_ids.size() && ids < best_ids)));
    if (better) {
      best_phi = phi;
      best_ids = ids;
      found = true;
    }
  }
  if (!found) throw DataError("no evaluable subset exists");
  return {best_ids, best_phi};
}

}  // namespace cloudlead::detector
