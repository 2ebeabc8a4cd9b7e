#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <vector>

#include "cloudlead/errors.hpp"

namespace cloudlead {

template <class DerivedP, class DerivedT>
double rmse(const Eigen::MatrixBase<DerivedP>& pred, const Eigen::MatrixBase<DerivedT>& truth) {
  if (pred.size() != truth.size()) throw ConfigError("rmse: length mismatch");
  if (pred.size() == 0) throw ConfigError("rmse: empty input");
  return std::sqrt((pred.template cast<double>() - truth.template cast<double>())
                       .array()
                       .square()
                       .mean());
}

// mean(pred - truth): positive when the prediction runs high.
template <class DerivedP, class DerivedT>
double bias(const Eigen::MatrixBase<DerivedP>& pred, const Eigen::MatrixBase<DerivedT>& truth) {
  if (pred.size() != truth.size()) throw ConfigError("bias: length mismatch");
  if (pred.size() == 0) throw ConfigError("bias: empty input");
  return (pred.template cast<double>() - truth.template cast<double>()).mean();
}

struct Quartiles {
  double q25 = 0.0, q50 = 0.0, q75 = 0.0;
};

// Linear-interpolation quantiles of a copied, sorted sample.
inline Quartiles quartiles(std::vector<double> xs) {
  if (xs.empty()) throw ConfigError("quartiles: empty input");
  std::sort(xs.begin(), xs.end());
  auto at = [&](double q) {
    const double pos = q * (xs.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, xs.size() - 1);
    const double frac = pos - lo;
    return xs[lo] * (1.0 - frac) + xs[hi] * frac;
  };
  return {at(0.25), at(0.5), at(0.75)};
}

inline double median(std::vector<double> xs) { return quartiles(std::move(xs)).q50; }

inline double variance(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return acc / static_cast<double>(xs.size() - 1);
}

}  // namespace cloudlead
