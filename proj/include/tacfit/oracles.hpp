#ifndef TACFIT_ORACLES_HPP
#define TACFIT_ORACLES_HPP

#include <functional>
#include <span>

#include "tacfit/observations.hpp"

namespace tacfit {

// Slow, independent checks for the clever implementations. These never call
// the modules they validate; they share only the observation types.

struct BrutePlaneFit {
  double a = 0.0;
  double b = 0.0;
  double r = 0.0;
};

/// Enumerates every index triple i < j < m with both alternation phases,
/// levels each 3x3 system, keeps the candidates whose full residual stays
/// within r(1 + 1e-12), and returns the smallest feasible radius.
/// Combinatorial: requires n <= 14.
BrutePlaneFit brute_minimax_2basis(std::span<const double> u, const Observations& obs);

struct GridScanResult {
  double argmin = 0.0;
  double min_value = 0.0;
};

/// Exhaustive uniform scan of a scalar objective; returns the best sample.
GridScanResult grid_scan(const std::function<double(double)>& objective, Interval iv,
                         long long samples);

struct BruteL2Plane {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double rss = 0.0;
};

/// Grid argmin of ||lambda1 e^{k t} + lambda2 - T||^2 over the given
/// coefficient windows (original-time parameterization). The windows must
/// contain the analytic solution.
BruteL2Plane brute_l2_plane(double k, const Observations& obs, Interval lambda1_range,
                            Interval lambda2_range, double resolution);

}  // namespace tacfit

#endif  // TACFIT_ORACLES_HPP
