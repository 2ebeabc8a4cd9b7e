#pragma once

#include <Eigen/Dense>

#include "cloudlead/errors.hpp"

namespace cloudlead::events {

// Differential cloud-event series: entry i is the forward difference
// x[i+1]-x[i] when that drop reaches the threshold (diff <= -dx), else 0.
// Length is one less than the profile.
struct EventSeries {
  Eigen::VectorXd values;
  double dx = 0.3;
  bool any() const { return (values.array() != 0.0).any(); }
};

EventSeries extract_events(const Eigen::Ref<const Eigen::VectorXd>& profile, double dx);

struct Pearson {
  double r = 0.0;
  bool defined = false;  // false when either side has zero variance
};

// Standard Pearson r over two equal-length expressions. Zero-variance input
// yields r = 0 with defined = false instead of NaN so callers stay total.
template <class DerivedA, class DerivedB>
Pearson pearson(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) throw ConfigError("pearson: length mismatch");
  if (a.size() < 2) throw ConfigError("pearson: need at least 2 samples");
  const double n = static_cast<double>(a.size());
  const double ma = a.template cast<double>().mean();
  const double mb = b.template cast<double>().mean();
  const auto ca = (a.template cast<double>().array() - ma);
  const auto cb = (b.template cast<double>().array() - mb);
  const double va = (ca * ca).sum();
  const double vb = (cb * cb).sum();
  if (va <= 0.0 || vb <= 0.0) return {0.0, false};
  (void)n;
  return {(ca * cb).sum() / std::sqrt(va * vb), true};
}

struct LagCorrResult {
  int delta_t_max = 0;   // >0: detector sees the event before the target
  double pcc_max = 0.0;  // Pearson r at the optimal shift
  bool defined = false;
};

// Scans shifts dt in [-t_shift, t_shift]; the target series is read at
// index i+dt with zero padding outside its range, the detector is fixed.
// Ties on r break toward the smallest |dt|, then the positive dt.
LagCorrResult lagged_correlation(const EventSeries& target, const EventSeries& detector,
                                 int t_shift);

}  // namespace cloudlead::events
