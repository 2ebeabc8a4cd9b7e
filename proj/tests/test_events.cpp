#include <doctest.h>

#include "cloudlead/events.hpp"
#include "cloudlead/rng.hpp"

using namespace cloudlead;
using namespace cloudlead::events;

namespace {

// Independent reference for the shift scan: textbook two-pass Pearson on
// explicitly constructed shifted copies, same tie-break rule.
double naive_pearson(const std::vector<double>& a, const std::vector<double>& b,
                     bool* defined) {
  const std::size_t n = a.size();
  double sa = 0, sb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sa += a[i];
    sb += b[i];
  }
  const double ma = sa / n, mb = sb / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0 || sbb <= 0) {
    *defined = false;
    return 0.0;
  }
  *defined = true;
  return sab / std::sqrt(saa * sbb);
}

LagCorrResult brute_force_scan(const EventSeries& target, const EventSeries& detector,
                               int t_shift) {
  const auto n = static_cast<std::size_t>(target.values.size());
  LagCorrResult best;
  for (int dt = -t_shift; dt <= t_shift; ++dt) {
    std::vector<double> shifted(n, 0.0), det(n);
    for (std::size_t i = 0; i < n; ++i) {
      const long j = static_cast<long>(i) + dt;
      shifted[i] = (j >= 0 && j < static_cast<long>(n)) ? target.values[j] : 0.0;
      det[i] = detector.values[static_cast<Eigen::Index>(i)];
    }
    bool defined = false;
    const double r = naive_pearson(shifted, det, &defined);
    if (!defined) continue;
    const bool better =
        !best.defined || r > best.pcc_max ||
        (r == best.pcc_max && (std::abs(dt) < std::abs(best.delta_t_max) ||
                               (std::abs(dt) == std::abs(best.delta_t_max) &&
                                dt > best.delta_t_max)));
    if (better) best = {dt, r, true};
  }
  return best;
}

EventSeries random_events(Rng& rng, int length, int n_events) {
  EventSeries s;
  s.dx = 0.3;
  s.values = Eigen::VectorXd::Zero(length);
  for (int e = 0; e < n_events; ++e)
    s.values[rng.uniform_int(0, length - 1)] = -rng.uniform(0.3, 1.0);
  return s;
}

}  // namespace

TEST_SUITE("events") {

TEST_CASE("extract_events keeps only threshold drops") {
  Eigen::VectorXd bell(8);
  bell << 0.0, 0.2, 0.5, 0.9, 1.0, 0.8, 0.4, 0.0;  // gentle slopes only

  SUBCASE("monotone-ish profile with dx=0.3 below drop sizes") {
    // steepest drop here is -0.4 at index 5; with dx=0.45 nothing fires
    const EventSeries ev = extract_events(bell, 0.45);
    CHECK_FALSE(ev.any());
  }
  SUBCASE("a 0.8 -> 0.4 drop records -0.4") {
    const EventSeries ev = extract_events(bell, 0.3);
    CHECK(ev.values[5] == doctest::Approx(-0.4));
    CHECK(ev.values[4] == 0.0);  // -0.2 is below threshold
  }
  SUBCASE("a drop of exactly dx is included") {
    Eigen::VectorXd x(4);
    x << 0.9, 0.6, 0.6, 0.6;  // drop of exactly 0.3
    const EventSeries ev = extract_events(x, 0.3);
    CHECK(ev.values[0] == doctest::Approx(-0.3));
  }
}

TEST_CASE("extract_events is invariant to constant offsets") {
  // dyadic grid values keep the differencing exact in floating point
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd x(50);
    for (int i = 0; i < 50; ++i) x[i] = static_cast<double>(rng.uniform_int(0, 64)) / 64.0;
    const double c = static_cast<double>(rng.uniform_int(-16, 16)) / 64.0;
    const EventSeries a = extract_events(x, 0.25);
    const EventSeries b = extract_events(x.array() + c, 0.25);
    CHECK(a.values == b.values);
  }
}

TEST_CASE("pearson basics") {
  Eigen::VectorXd a(5);
  a << 1, 2, 3, 4, 5;
  CHECK(pearson(a, a).r == doctest::Approx(1.0));
  CHECK(pearson(a, (-a).eval()).r == doctest::Approx(-1.0));

  const Eigen::VectorXd c = Eigen::VectorXd::Constant(5, 2.0);
  const Pearson p = pearson(c, a);
  CHECK(p.r == 0.0);
  CHECK_FALSE(p.defined);

  Eigen::VectorXd b(4);
  CHECK_THROWS_AS(pearson(a, b), ConfigError);
}

TEST_CASE("lagged_correlation examples") {
  SUBCASE("identical nonzero series peak at zero shift") {
    Rng rng(5);
    const EventSeries s = random_events(rng, 60, 4);
    const LagCorrResult r = lagged_correlation(s, s, 12);
    CHECK(r.defined);
    CHECK(r.delta_t_max == 0);
    CHECK(r.pcc_max == doctest::Approx(1.0));
  }
  SUBCASE("impulse at 10 in detector, 13 in target gives +3") {
    EventSeries det, tgt;
    det.values = Eigen::VectorXd::Zero(40);
    tgt.values = Eigen::VectorXd::Zero(40);
    det.values[10] = -0.5;
    tgt.values[13] = -0.5;
    const LagCorrResult r = lagged_correlation(tgt, det, 8);
    CHECK(r.defined);
    CHECK(r.delta_t_max == 3);
    CHECK(r.pcc_max == doctest::Approx(1.0));
    // and the oracle agrees
    const LagCorrResult o = brute_force_scan(tgt, det, 8);
    CHECK(o.delta_t_max == r.delta_t_max);
  }
  SUBCASE("all-zero target is undefined") {
    EventSeries det, tgt;
    det.values = Eigen::VectorXd::Zero(30);
    tgt.values = Eigen::VectorXd::Zero(30);
    det.values[4] = -0.4;
    const LagCorrResult r = lagged_correlation(tgt, det, 6);
    CHECK_FALSE(r.defined);
    CHECK(r.delta_t_max == 0);
    CHECK(r.pcc_max == 0.0);
  }
}

// Different summation orders can leave two shifts tied to within one ulp;
// the scan must achieve the oracle's maximum, and on a unique maximum the
// chosen shift must match exactly.
void check_scan_equivalence(const EventSeries& tgt, const EventSeries& det, int t_shift) {
  const LagCorrResult mine = lagged_correlation(tgt, det, t_shift);
  const LagCorrResult oracle = brute_force_scan(tgt, det, t_shift);
  REQUIRE(mine.defined == oracle.defined);
  if (!mine.defined) {
    CHECK(mine.delta_t_max == 0);
    CHECK(mine.pcc_max == 0.0);
    return;
  }
  CHECK(mine.pcc_max == doctest::Approx(oracle.pcc_max).epsilon(1e-12));
  // count oracle-side ties to decide whether the argmax is forced
  int near_ties = 0;
  {
    const auto n = static_cast<std::size_t>(tgt.values.size());
    for (int dt = -t_shift; dt <= t_shift; ++dt) {
      std::vector<double> shifted(n, 0.0), d(n);
      for (std::size_t i = 0; i < n; ++i) {
        const long j = static_cast<long>(i) + dt;
        shifted[i] = (j >= 0 && j < static_cast<long>(n)) ? tgt.values[j] : 0.0;
        d[i] = det.values[static_cast<Eigen::Index>(i)];
      }
      bool defined = false;
      const double r = naive_pearson(shifted, d, &defined);
      if (defined && r >= oracle.pcc_max - 1e-9) ++near_ties;
    }
  }
  if (near_ties <= 1) CHECK(mine.delta_t_max == oracle.delta_t_max);
}

TEST_CASE("lagged_correlation equals the brute-force oracle") {
  Rng rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    const int len = static_cast<int>(rng.uniform_int(20, 80));
    const int t_shift = static_cast<int>(rng.uniform_int(1, 15));
    const EventSeries tgt = random_events(rng, len, static_cast<int>(rng.uniform_int(0, 5)));
    const EventSeries det = random_events(rng, len, static_cast<int>(rng.uniform_int(0, 5)));
    check_scan_equivalence(tgt, det, t_shift);
  }
}

TEST_CASE("antisymmetry on impulse pairs") {
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    EventSeries a, b;
    a.values = Eigen::VectorXd::Zero(50);
    b.values = Eigen::VectorXd::Zero(50);
    const int ia = static_cast<int>(rng.uniform_int(12, 37));
    const int shift = static_cast<int>(rng.uniform_int(-8, 8));
    a.values[ia] = -rng.uniform(0.3, 1.0);
    b.values[ia + shift] = -rng.uniform(0.3, 1.0);
    const LagCorrResult ab = lagged_correlation(a, b, 10);
    const LagCorrResult ba = lagged_correlation(b, a, 10);
    CHECK(ab.delta_t_max == -ba.delta_t_max);
  }
}

TEST_CASE("pcc_max never increases when the search range shrinks") {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const EventSeries tgt = random_events(rng, 60, 3);
    const EventSeries det = random_events(rng, 60, 3);
    const LagCorrResult wide = lagged_correlation(tgt, det, 12);
    const LagCorrResult narrow = lagged_correlation(tgt, det, 4);
    if (wide.defined && narrow.defined) CHECK(narrow.pcc_max <= wide.pcc_max + 1e-15);
  }
}

}  // TEST_SUITE
