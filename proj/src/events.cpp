#include "cloudlead/events.hpp"

namespace cloudlead::events {

EventSeries extract_events(const Eigen::Ref<const Eigen::VectorXd>& profile, double dx) {
  if (!(dx > 0.0)) throw ConfigError("event threshold dx must be positive");
  if (profile.size() < 2) throw ConfigError("profile too short for differencing");
  EventSeries out;
  out.dx = dx;
  out.values = Eigen::VectorXd::Zero(profile.size() - 1);
  for (Eigen::Index i = 0; i + 1 < profile.size(); ++i) {
    const double diff = profile[i + 1] - profile[i];
    if (diff <= -dx) out.values[i] = diff;
  }
  return out;
}

LagCorrResult lagged_correlation(const EventSeries& target, const EventSeries& detector,
                                 int t_shift) {
  if (t_shift < 1) throw ConfigError("t_shift must be >= 1");
  const Eigen::Index n = target.values.size();
  if (n != detector.values.size())
    throw ConfigError("lagged_correlation: series length mismatch");

  LagCorrResult best;
  Eigen::VectorXd shifted(n);
  for (int dt = -t_shift; dt <= t_shift; ++dt) {
    shifted.setZero();
    // shifted[i] = target[i + dt], zero outside [0, n)
    const Eigen::Index lo = std::max<Eigen::Index>(0, -dt);
    const Eigen::Index hi = std::min<Eigen::Index>(n, n - dt);
    if (hi > lo) shifted.segment(lo, hi - lo) = target.values.segment(lo + dt, hi - lo);
    const Pearson p = pearson(shifted, detector.values);
    if (!p.defined) continue;
    const bool better =
        !best.defined || p.r > best.pcc_max ||
        (p.r == best.pcc_max &&
         (std::abs(dt) < std::abs(best.delta_t_max) ||
          (std::abs(dt) == std::abs(best.delta_t_max) && dt > best.delta_t_max)));
    if (better) best = {dt, p.r, true};
  }
  return best;
}

}  // namespace cloudlead::events
