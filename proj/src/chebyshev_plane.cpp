#include "tacfit/chebyshev_plane.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "tacfit/linear_projection.hpp"

namespace tacfit {

namespace {

constexpr double kCertSlack = 1e-12;   // violator tolerance: r * (1 + slack)
constexpr double kClusterTol = 1e-12;  // relative clustering of extreme values

int sgn(double x) noexcept { return (x > 0.0) - (x < 0.0); }

// Levels the residual a*u_p + b - T_p to (+h, -h, +h) on the reference
// triple. Singular exactly when u coincides at the outer points.
bool solve_reference(const std::array<std::size_t, 3>& ref, std::span<const double> u,
                     std::span<const double> values, double& a, double& b, double& h) {
  const double du = u[ref[0]] - u[ref[2]];
  if (du == 0.0) return false;
  a = (values[ref[0]] - values[ref[2]]) / du;
  h = 0.5 * (values[ref[1]] - values[ref[0]] - a * (u[ref[1]] - u[ref[0]]));
  b = values[ref[0]] + h - a * u[ref[0]];
  return std::isfinite(a) && std::isfinite(b) && std::isfinite(h);
}

std::array<std::size_t, 3> initial_reference(std::span<const double> u,
                                             std::span<const double> values) {
  const std::size_t n = values.size();

  // Heuristic start: extreme points of the least-squares residual.
  double su = 0.0, suu = 0.0, sv = 0.0, suv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    su += u[i];
    suu += u[i] * u[i];
    sv += values[i];
    suv += u[i] * values[i];
  }
  const double nn = static_cast<double>(n);
  const double det = nn * suu - su * su;
  double a0 = 0.0, b0 = sv / nn;
  if (std::isfinite(det) && det > 1e-15 * nn * suu) {
    a0 = (nn * suv - su * sv) / det;
    b0 = (suu * sv - su * suv) / det;
  }
  std::vector<double> rho(n);
  for (std::size_t i = 0; i < n; ++i) rho[i] = a0 * u[i] + b0 - values[i];

  std::size_t imax = 0, imin = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (rho[i] > rho[imax]) imax = i;
    if (rho[i] < rho[imin]) imin = i;
  }
  if (imax == imin) return {0, n / 2, n - 1};
  const std::size_t p1 = std::min(imax, imin);
  const std::size_t p2 = std::max(imax, imin);

  // Third point: largest residual that alternates with (p1, p2).
  std::size_t third = n;  // sentinel
  double best = 0.0;
  for (std::size_t q = 0; q < p1; ++q) {
    if (sgn(rho[q]) == sgn(rho[p2]) && std::abs(rho[q]) >= best) {
      best = std::abs(rho[q]);
      third = q;
    }
  }
  for (std::size_t q = p2 + 1; q < n; ++q) {
    if (sgn(rho[q]) == sgn(rho[p1]) && std::abs(rho[q]) >= best) {
      best = std::abs(rho[q]);
      third = q;
    }
  }
  if (third == n) {
    for (std::size_t q = 0; q < n; ++q) {
      if (q != p1 && q != p2) {
        third = q;
        break;
      }
    }
  }
  std::array<std::size_t, 3> ref{p1, p2, third};
  std::sort(ref.begin(), ref.end());
  return ref;
}

}  // namespace

PlaneFit minimax_2basis(std::span<const double> u, const Observations& obs) {
  const std::size_t n = obs.size();
  if (u.size() != n || n < 3) {
    throw std::invalid_argument("minimax_2basis: u must match n >= 3 observations");
  }
  const std::span<const double> values(obs.values);

  std::array<std::size_t, 3> ref = initial_reference(u, values);
  const int max_exchanges = 200 + 3 * static_cast<int>(n);
  std::vector<double> residual(n);

  for (int iter = 0; iter < max_exchanges; ++iter) {
    double a, b, h;
    if (!solve_reference(ref, u, values, a, b, h)) {
      throw std::invalid_argument("minimax_2basis: u must be strictly monotone");
    }
    const double r = std::abs(h);

    std::size_t worst = 0;
    double worst_mag = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      residual[i] = a * u[i] + b - values[i];
      if (std::abs(residual[i]) > worst_mag) {
        worst_mag = std::abs(residual[i]);
        worst = i;
      }
    }

    const bool certified = worst_mag <= r * (1.0 + kCertSlack) || worst == ref[0] ||
                           worst == ref[1] || worst == ref[2];
    if (certified) {
      PlaneFit fit;
      fit.a = a;
      fit.b = b;
      fit.r = r;
      fit.triple = ref;
      fit.residuals = std::move(residual);
      return fit;
    }

    // One-point exchange preserving sign alternation on the reference.
    const int sign_h = sgn(h);
    const std::array<int, 3> ref_sign{sign_h, -sign_h, sign_h};
    const int sq = sgn(residual[worst]);
    if (worst < ref[0]) {
      if (sq == ref_sign[0]) {
        ref[0] = worst;
      } else {
        ref = {worst, ref[0], ref[1]};
      }
    } else if (worst > ref[2]) {
      if (sq == ref_sign[2]) {
        ref[2] = worst;
      } else {
        ref = {ref[1], ref[2], worst};
      }
    } else if (worst < ref[1]) {
      (sq == ref_sign[0] ? ref[0] : ref[1]) = worst;
    } else {
      (sq == ref_sign[1] ? ref[1] : ref[2]) = worst;
    }
  }
  throw std::runtime_error("minimax_2basis: exchange failed to converge");
}

double e_inf(double k, const Observations& obs) {
  if (k == 0.0 || !std::isfinite(k)) {
    throw std::invalid_argument("e_inf: rate must be finite and nonzero");
  }
  return minimax_2basis(exp_basis(k, obs), obs).r;
}

const char* target_case_name(const TargetClass& cls) noexcept {
  if (std::holds_alternative<ConstantBest>(cls)) return "constant_best";
  if (std::holds_alternative<LimitAtMinusInfinity>(cls)) return "limit_at_minus_infinity";
  if (std::holds_alternative<LimitAtZeroLine>(cls)) return "limit_at_zero_line";
  return "interior_minimum";
}

DegenerateTargetError::DegenerateTargetError(TargetClass witness)
    : Error(Errc::DegenerateTarget,
            std::string("degenerate target: ") + target_case_name(witness)),
      witness_(std::move(witness)) {}

TargetClass classify_target(const Observations& obs) {
  const std::vector<double>& v = obs.values;
  const std::size_t n = v.size();
  const double big = *std::max_element(v.begin(), v.end());
  const double small = *std::min_element(v.begin(), v.end());
  const double tol = kClusterTol * (big - small);
  auto is_max = [&](std::size_t i) { return v[i] >= big - tol; };
  auto is_min = [&](std::size_t i) { return v[i] <= small + tol; };

  // Case 1: a minimum strictly between two maxima, or the reverse.
  {
    std::size_t first = n, last = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (is_max(i)) {
        if (first == n) first = i;
        last = i;
      }
    }
    for (std::size_t i = first + 1; last != n && i < last; ++i) {
      if (is_min(i)) return ConstantBest{0.5 * (small + big)};
    }
    first = last = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (is_min(i)) {
        if (first == n) first = i;
        last = i;
      }
    }
    for (std::size_t i = first + 1; last != n && i < last; ++i) {
      if (is_max(i)) return ConstantBest{0.5 * (small + big)};
    }
  }

  // Case 2: strict maximum up front, then the runner-up maximum after a
  // minimum; best approximations escape to k -> -inf.
  if (is_max(0)) {
    double runner_up = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < n; ++i) runner_up = std::max(runner_up, v[i]);
    if (runner_up < big - tol) {
      std::size_t first_min = n;
      for (std::size_t i = 1; i < n; ++i) {
        if (is_min(i)) {
          first_min = i;
          break;
        }
      }
      if (first_min != n) {
        for (std::size_t j = first_min + 1; j < n; ++j) {
          if (v[j] >= runner_up - tol) {
            std::vector<double> limit(n, 0.5 * (runner_up + small));
            limit[0] = big;
            return LimitAtMinusInfinity{std::move(limit)};
          }
        }
      }
    }
  }

  // Case 3: the best max-norm line alternates at four or more points.
  {
    const double t1 = obs.times.front();
    std::vector<double> line_u(n);
    for (std::size_t i = 0; i < n; ++i) line_u[i] = obs.times[i] - t1;
    const PlaneFit lf = minimax_2basis(line_u, obs);
    if (lf.r <= tol) {
      // The data lie on a line; with four or more points the alternation
      // pattern holds trivially with r = 0.
      if (n >= 4) return LimitAtZeroLine{lf.a, lf.b - lf.a * t1};
    } else {
      int alternations = 0;
      int last_sign = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(lf.residuals[i]) >= lf.r * (1.0 - 1e-9)) {
          const int s = sgn(lf.residuals[i]);
          if (s != 0 && s != last_sign) {
            ++alternations;
            last_sign = s;
          }
        }
      }
      if (alternations >= 4) return LimitAtZeroLine{lf.a, lf.b - lf.a * t1};
    }
  }

  return InteriorMinimum{};
}

namespace {

// (e^{k d3} - 1) / (e^{k d2} - 1) without overflow or 0/0 for k != 0.
double expm1_ratio(double k, double d2, double d3) {
  if (k * d2 > 690.0) {
    const double f = std::exp(k * (d3 - d2));  // may overflow, sign is right
    return f * (-std::expm1(-k * d3)) / (-std::expm1(-k * d2));
  }
  return std::expm1(k * d3) / std::expm1(k * d2);
}

}  // namespace

ExpThroughPoints exp_through_three_points(const std::array<double, 3>& c,
                                          const std::array<double, 3>& y) {
  if (!(c[0] < c[1] && c[1] < c[2])) {
    throw std::invalid_argument("exp_through_three_points: c must be strictly increasing");
  }
  const bool decreasing = y[0] > y[1] && y[1] > y[2];
  const bool increasing = y[0] < y[1] && y[1] < y[2];
  if (!decreasing && !increasing) {
    throw Error(Errc::NonMonotone, "no single exponential interpolates non-monotone y");
  }
  const double lhs = (y[1] - y[0]) * (c[2] - c[0]);
  const double rhs = (y[2] - y[0]) * (c[1] - c[0]);
  if (std::abs(lhs - rhs) <=
      4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lhs), std::abs(rhs))) {
    throw Error(Errc::CollinearPoints, "collinear points force k = 0");
  }

  const double d2 = c[1] - c[0];
  const double d3 = c[2] - c[0];
  const auto phi = [&](double k) {
    if (k == 0.0) return y[0] + (y[1] - y[0]) * d3 / d2;
    return y[0] + (y[1] - y[0]) * expm1_ratio(k, d2, d3);
  };
  const auto f = [&](double k) { return phi(k) - y[2]; };

  // Expanding bracket: phi is strictly monotone with the root guaranteed.
  double lo = -1.0, hi = 1.0;
  double flo = f(lo), fhi = f(hi);
  int expansions = 0;
  while (sgn(flo) == sgn(fhi)) {
    if (++expansions > 60) {
      throw std::runtime_error("exp_through_three_points: bracket expansion failed");
    }
    lo *= 2.0;
    hi *= 2.0;
    flo = f(lo);
    fhi = f(hi);
  }

  double k = 0.0;
  if (flo == 0.0) {
    k = lo;
  } else if (fhi == 0.0) {
    k = hi;
  } else {
    for (int iter = 0; iter < 200; ++iter) {
      k = 0.5 * (lo + hi);
      const double fm = f(k);
      if (fm == 0.0 || hi - lo <= 1e-14 * (1.0 + std::abs(k))) break;
      if (sgn(fm) == sgn(flo)) {
        lo = k;
        flo = fm;
      } else {
        hi = k;
      }
    }
    // Newton polish to push the interpolation residual toward rounding
    // level; the bisection bracket is already within ~1e-14 of the simple
    // root, so the steps are free-standing with only a sanity cap.
    if (std::abs(k) * d3 < 600.0) {
      for (int step = 0; step < 12; ++step) {
        const double em2 = std::expm1(k * d2);
        const double em3 = std::expm1(k * d3);
        const double deriv = (y[1] - y[0]) *
                             (d3 * std::exp(k * d3) * em2 - d2 * std::exp(k * d2) * em3) /
                             (em2 * em2);
        if (deriv == 0.0 || !std::isfinite(deriv)) break;
        const double delta = f(k) / deriv;
        if (!std::isfinite(delta) || std::abs(delta) > 0.1 * (1.0 + std::abs(k))) break;
        k -= delta;
        if (std::abs(delta) <=
            4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(k))) {
          break;
        }
      }
    }
  }
  if (k == 0.0) {
    throw Error(Errc::CollinearPoints, "interpolation collapsed onto k = 0");
  }

  ExpThroughPoints result;
  const double a_shifted = (y[1] - y[0]) / std::expm1(k * d2);
  result.k = k;
  result.b = y[0] - a_shifted;
  result.a = a_shifted * std::exp(-k * c[0]);
  return result;
}

}  // namespace tacfit
