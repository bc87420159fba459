#include "tacfit/oracles.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace tacfit {

BrutePlaneFit brute_minimax_2basis(std::span<const double> u, const Observations& obs) {
  const std::size_t n = obs.size();
  if (u.size() != n || n < 3) {
    throw std::invalid_argument("brute_minimax_2basis: u must match n >= 3 observations");
  }
  if (n > 14) {
    throw std::invalid_argument("brute_minimax_2basis: n <= 14 (combinatorial cost)");
  }
  const std::vector<double>& v = obs.values;

  BrutePlaneFit best;
  best.r = std::numeric_limits<double>::infinity();

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t m = j + 1; m < n; ++m) {
        for (int phase : {+1, -1}) {
          // Level a*u_p + b - T_p to phase * (+h, -h, +h) on the triple.
          const double du = u[i] - u[m];
          if (du == 0.0) continue;
          const double a = (v[i] - v[m]) / du;
          const double h = 0.5 * phase * (v[j] - v[i] - a * (u[j] - u[i]));
          const double b = v[i] + phase * h - a * u[i];
          if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(h)) continue;
          const double r = std::abs(h);
          if (r >= best.r) continue;
          bool feasible = true;
          for (std::size_t p = 0; p < n && feasible; ++p) {
            feasible = std::abs(a * u[p] + b - v[p]) <= r * (1.0 + 1e-12);
          }
          if (feasible) {
            best.a = a;
            best.b = b;
            best.r = r;
          }
        }
      }
    }
  }
  if (!std::isfinite(best.r)) {
    throw std::runtime_error("brute_minimax_2basis: no feasible alternation triple");
  }
  return best;
}

GridScanResult grid_scan(const std::function<double(double)>& objective, Interval iv,
                         long long samples) {
  if (samples < 2) {
    throw std::invalid_argument("grid_scan: need at least 2 samples");
  }
  GridScanResult best;
  best.min_value = std::numeric_limits<double>::infinity();
  for (long long i = 0; i < samples; ++i) {
    const double x = i == samples - 1
                         ? iv.hi
                         : iv.lo + (iv.hi - iv.lo) * static_cast<double>(i) /
                               static_cast<double>(samples - 1);
    const double f = objective(x);
    if (f < best.min_value) {
      best.min_value = f;
      best.argmin = x;
    }
  }
  return best;
}

BruteL2Plane brute_l2_plane(double k, const Observations& obs, Interval lambda1_range,
                            Interval lambda2_range, double resolution) {
  if (!(resolution > 0.0)) {
    throw std::invalid_argument("brute_l2_plane: resolution must be positive");
  }
  const std::size_t n = obs.size();
  std::vector<double> e(n);
  for (std::size_t i = 0; i < n; ++i) e[i] = std::exp(k * obs.times[i]);

  const auto steps = [&](const Interval& iv) {
    return static_cast<long long>(std::floor(iv.width() / resolution)) + 1;
  };
  const long long s1 = steps(lambda1_range);
  const long long s2 = steps(lambda2_range);

  BruteL2Plane best;
  best.rss = std::numeric_limits<double>::infinity();
  for (long long i = 0; i < s1; ++i) {
    const double l1 = lambda1_range.lo + resolution * static_cast<double>(i);
    for (long long j = 0; j < s2; ++j) {
      const double l2 = lambda2_range.lo + resolution * static_cast<double>(j);
      double rss = 0.0;
      for (std::size_t p = 0; p < n; ++p) {
        const double r = l1 * e[p] + l2 - obs.values[p];
        rss += r * r;
      }
      if (rss < best.rss) {
        best = {l1, l2, rss};
      }
    }
  }
  return best;
}

}  // namespace tacfit
