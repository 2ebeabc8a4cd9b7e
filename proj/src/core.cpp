#include "cloudlead/core.hpp"

#include <cmath>
#include <cstdio>

namespace cloudlead {

std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", int(d.year()),
                unsigned(d.month()), unsigned(d.day()));
  return buf;
}

Date parse_date(const std::string& s) {
  int y = 0;
  unsigned m = 0, d = 0;
  if (std::sscanf(s.c_str(), "%d-%u-%u", &y, &m, &d) != 3)
    throw DataError("unparseable date: '" + s + "'");
  Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!date.ok()) throw DataError("invalid calendar date: '" + s + "'");
  return date;
}

Date add_days(const Date& d, int n) {
  return Date{std::chrono::sys_days(d) + std::chrono::days(n)};
}

int Dataset::site_index(const std::string& id) const {
  for (int i = 0; i < n_sites(); ++i)
    if (sites[i].id == id) return i;
  return -1;
}

void Dataset::validate() const {
  if (n_sites() < 2) throw DataError("dataset needs at least 2 sites");
  if (n_days < 1) throw DataError("dataset needs at least 1 day");
  if (step_minutes <= 0 || 1440 % step_minutes != 0)
    throw DataError("step_minutes must divide 1440");
  for (int i = 0; i < n_sites(); ++i) {
    if (!std::isfinite(sites[i].x_km) || !std::isfinite(sites[i].y_km))
      throw DataError("non-finite coordinates for site '" + sites[i].id + "'");
    for (int j = i + 1; j < n_sites(); ++j)
      if (sites[i].id == sites[j].id)
        throw DataError("duplicate site id '" + sites[i].id + "'");
  }
  if (values.rows() != n_sites() ||
      values.cols() != static_cast<Eigen::Index>(n_days) * steps_per_day())
    throw DataError("value grid does not match sites x days x steps");
  for (Eigen::Index i = 0; i < values.rows(); ++i)
    for (Eigen::Index t = 0; t < values.cols(); ++t) {
      const double v = values(i, t);
      if (!std::isfinite(v))
        throw DataError("non-finite value at site '" + sites[i].id + "', step " +
                        std::to_string(t));
      if (v < 0.0)
        throw DataError("negative irradiance at site '" + sites[i].id + "', step " +
                        std::to_string(t));
      if (normalized && v > 1.0)
        throw DataError("normalized value above 1 at site '" + sites[i].id +
                        "', step " + std::to_string(t));
    }
}

Dataset normalize(const Dataset& raw) {
  Dataset out = raw;
  out.site_max.clear();
  for (int i = 0; i < raw.n_sites(); ++i) {
    const double mx = raw.values.row(i).maxCoeff();
    if (!(mx > 0.0))
      throw DataError("degenerate site '" + raw.sites[i].id +
                      "': no positive irradiance in record");
    out.values.row(i) = raw.values.row(i) / mx;
    out.site_max[raw.sites[i].id] = mx;
  }
  out.normalized = true;
  return out;
}

Eigen::VectorXd resample_hourly(const Eigen::Ref<const Eigen::VectorXd>& day_values,
                                int step_minutes) {
  if (step_minutes <= 0 || 60 % step_minutes != 0)
    throw ConfigError("hourly resampling needs step_minutes dividing 60");
  const int per_hour = 60 / step_minutes;
  if (day_values.size() != static_cast<Eigen::Index>(per_hour) * 24)
    throw DataError("daily profile length does not match step_minutes");
  Eigen::VectorXd hourly(24);
  for (int h = 0; h < 24; ++h)
    hourly[h] = day_values.segment(static_cast<Eigen::Index>(h) * per_hour, per_hour).mean();
  return hourly;
}

Eigen::VectorXd resample_hourly(const DailyProfile& profile) {
  return resample_hourly(profile.values, profile.step_minutes);
}

Eigen::VectorXd hourly_series(const Dataset& ds, int site) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(ds.n_days) * 24);
  for (int d = 0; d < ds.n_days; ++d)
    out.segment(static_cast<Eigen::Index>(d) * 24, 24) =
        resample_hourly(ds.day_values(site, d), ds.step_minutes);
  return out;
}

}  // namespace cloudlead
