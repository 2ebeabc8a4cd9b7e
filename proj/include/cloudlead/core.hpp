#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cloudlead/errors.hpp"

namespace cloudlead {

using Date = std::chrono::year_month_day;

std::string format_date(const Date& d);
Date parse_date(const std::string& s);  // YYYY-MM-DD
Date add_days(const Date& d, int n);

struct SiteMeta {
  std::string id;
  double x_km = 0.0;  // planar easting
  double y_km = 0.0;  // planar northing
  std::optional<double> capacity_kw;
};

// One site-day of irradiance at fixed sub-hourly cadence, normalized to [0,1].
struct DailyProfile {
  Date date{};
  int step_minutes = 5;
  Eigen::VectorXd values;  // length 1440/step_minutes
};

// Time-aligned multi-site record. Values are stored as one sites x (days*M)
// matrix; day d of site i is the contiguous segment [d*M, (d+1)*M).
// Immutable after construction; safe to share across worker threads.
class Dataset {
public:
  std::vector<SiteMeta> sites;
  Date start_date{};
  int n_days = 0;
  int step_minutes = 5;
  bool normalized = false;
  std::map<std::string, double> site_max;  // per-site divisor used by normalize
  Eigen::MatrixXd values;                  // N x (n_days * steps_per_day)

  int n_sites() const { return static_cast<int>(sites.size()); }
  int steps_per_day() const { return 1440 / step_minutes; }
  Eigen::Index total_steps() const { return values.cols(); }

  int site_index(const std::string& id) const;  // -1 when absent
  Date day_date(int d) const { return add_days(start_date, d); }

  Eigen::Ref<const Eigen::VectorXd> day_values(int site, int day) const {
    return values.row(site).segment(static_cast<Eigen::Index>(day) * steps_per_day(),
                                    steps_per_day()).transpose();
  }
  DailyProfile profile(int site, int day) const {
    return DailyProfile{day_date(day), step_minutes, day_values(site, day)};
  }
  // Full record of one site as a continuous series.
  Eigen::Ref<const Eigen::RowVectorXd> series(int site) const { return values.row(site); }

  // Checks the structural invariants; throws DataError on violation.
  void validate() const;
};

// Divides each site by its own all-time maximum. Requires a positive maximum
// per site; an all-zero site is degenerate and reported by id.
Dataset normalize(const Dataset& raw);

// Mean over each hour's samples; step_minutes must divide 60.
Eigen::VectorXd resample_hourly(const DailyProfile& profile);
Eigen::VectorXd resample_hourly(const Eigen::Ref<const Eigen::VectorXd>& day_values,
                                int step_minutes);

// Whole-record hourly series for one site (n_days*24 values).
Eigen::VectorXd hourly_series(const Dataset& ds, int site);

}  // namespace cloudlead
