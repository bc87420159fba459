#ifndef TACFIT_CHEBYSHEV_PLANE_HPP
#define TACFIT_CHEBYSHEV_PLANE_HPP

#include <array>
#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "tacfit/observations.hpp"

namespace tacfit {

/// Best max-norm approximation a*u + b*I to the values in the plane spanned
/// by a strictly monotone vector u and the constant vector.
///
/// `residuals[i] = a*u[i] + b - T[i]`; the optimum is certified by the
/// alternation triple i < j < m where the residual attains +r,-r,+r or
/// -r,+r,-r, which characterizes the unique minimal element of the plane.
struct PlaneFit {
  double a = 0.0;
  double b = 0.0;
  double r = 0.0;                        // achieved max-norm error
  std::array<std::size_t, 3> triple{};   // alternation indices, ascending
  std::vector<double> residuals;
};

/// Discrete three-point exchange solver for the 2-basis minimax problem.
/// Requires u strictly monotone and n >= 3; terminates at the alternation
/// certificate (no residual exceeds r(1 + 1e-12)).
PlaneFit minimax_2basis(std::span<const double> u, const Observations& obs);

/// Max-norm error of the best approximation in the plane spanned by
/// e^{k(t-t_1)} and the constant vector.
double e_inf(double k, const Observations& obs);

/// Degenerate-target taxonomy: how the max-norm error behaves over the whole
/// rate half-line, and the witness payload for each behavior.
struct ConstantBest {
  double value = 0.0;  // (m + M) / 2
};
struct LimitAtMinusInfinity {
  std::vector<double> limit;  // (M, (M2+m)/2, ..., (M2+m)/2)
};
struct LimitAtZeroLine {
  double slope = 0.0;      // original-time line a0*t + b0
  double intercept = 0.0;
};
struct InteriorMinimum {};

using TargetClass =
    std::variant<ConstantBest, LimitAtMinusInfinity, LimitAtZeroLine, InteriorMinimum>;

const char* target_case_name(const TargetClass& cls) noexcept;

/// Decides which of the four cases the observation vector falls in:
/// 1. an extremum of one kind strictly between two of the other -> every plane
///    shares the constant best approximation (m+M)/2;
/// 2. the first value is the strict global maximum and some minimum precedes
///    the runner-up maximum -> best approximations escape to k -> -inf;
/// 3. the best max-norm line already alternates at four or more points ->
///    best approximations approach that line as k -> 0;
/// 4. otherwise an interior best rate exists.
TargetClass classify_target(const Observations& obs);

/// Thrown by max-norm fitting when the target falls in cases 1-3.
class DegenerateTargetError : public Error {
 public:
  explicit DegenerateTargetError(TargetClass witness);
  const TargetClass& witness() const noexcept { return witness_; }

 private:
  TargetClass witness_;
};

struct ExpThroughPoints {
  double a = 0.0;
  double b = 0.0;
  double k = 0.0;
};

/// The unique exponential a e^{k c} + b through three strictly monotone
/// points, located by bisection (plus a Newton polish) on the strictly
/// monotone map k -> f_k(c3) of the two-point exponential family.
/// Throws Error(CollinearPoints) when the points are collinear (k = 0 is
/// excluded) and Error(NonMonotone) when y is not strictly monotone.
ExpThroughPoints exp_through_three_points(const std::array<double, 3>& c,
                                          const std::array<double, 3>& y);

}  // namespace tacfit

#endif  // TACFIT_CHEBYSHEV_PLANE_HPP
