#pragma once

// Shared test oracles: central finite differences and scaled error comparison.

#include <algorithm>
#include <cmath>
#include <vector>

namespace testing_oracles {

// Central finite difference of loss() w.r.t. params[i]; restores params.
template <class F>
double fd_partial(std::vector<double>& params, std::size_t i, double h, F&& loss) {
  double orig = params[i];
  params[i] = orig + h;
  double lp = loss();
  params[i] = orig - h;
  double lm = loss();
  params[i] = orig;
  return (lp - lm) / (2.0 * h);
}

// Relative error with a floor so near-zero pairs compare absolutely.
inline double rel_err(double a, double b, double floor_ = 1e-3) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), floor_});
}

}  // namespace testing_oracles
