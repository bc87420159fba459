#ifndef TACFIT_LINEAR_PROJECTION_HPP
#define TACFIT_LINEAR_PROJECTION_HPP

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tacfit/observations.hpp"

namespace tacfit {

/// Basis-vector evaluations at the observation times. Exponential columns are
/// stored in shifted time t' = t - t_1 so the first entry is exactly 1 and
/// e^{k t} cannot overflow for t far from the origin; `coeff_unscale` maps the
/// solved coefficient of each column back to the original-time
/// parameterization (identity for constant and trigonometric columns).
struct BasisMatrix {
  std::vector<std::vector<double>> columns;  // each of length n
  std::vector<std::string> labels;           // exp(k1.), const, sin(mu1.), ...
  std::vector<double> coeff_unscale;         // one factor per column
};

/// (e^{k(t_i - t_1)})_i. First entry is exactly 1; entries that underflow to
/// zero are kept as exact zeros.
std::vector<double> exp_basis(double k, const Observations& obs);

/// Assembles the fitting basis for the given nonlinear point: one exponential
/// column per rate, the constant column, then a (sin, cos) pair per frequency.
BasisMatrix build_model_basis(std::span<const double> rates,
                              std::span<const double> frequencies,
                              const Observations& obs);

/// Coefficients (lambda1, lambda2) of the Euclidean best approximation
/// lambda1 e^{k t} + lambda2 to the values, via the closed-form solution of
/// the 2x2 normal-equations system. Reported in original time.
/// Throws Error(DegenerateGram) when e^{k t'} is numerically collinear with
/// the constant vector (relative Gram gap below 1e-12).
std::pair<double, double> lambdas_for_k(double k, const Observations& obs);

struct Projection {
  std::vector<double> coeffs;  // original-time coefficients, basis order
  double rss = 0.0;            // squared Euclidean residual norm
};

/// Euclidean projection of the observed values onto the span of the basis
/// columns, solved through the column-normalized Gram system with partial
/// pivoting. Throws Error(DegenerateGram) when a pivot ratio falls below
/// 1e-12 or the Gram entries are not finite.
Projection project_l2(const BasisMatrix& basis, const Observations& obs);

/// Euclidean error of the best in-span approximation for the nonlinear point
/// (rates, frequencies): ||F - T||_2. Propagates DegenerateGram.
double e2(std::span<const double> rates, std::span<const double> frequencies,
          const Observations& obs);

/// Single-rate convenience overload.
double e2(double k, const Observations& obs);

namespace detail {

/// Gram-system core shared by project_l2 and the fitting pipelines: columns
/// are referenced, not copied, so cached basis columns can be reused.
Projection project_l2_columns(std::span<const std::vector<double>* const> columns,
                              std::span<const double> coeff_unscale,
                              std::span<const double> values);

/// Solves the normal-equations system from precomputed inner products:
/// gram[i][j] = <B_i, B_j>, rhs[i] = <T, B_i>. The system is column-
/// normalized internally; a pivot ratio below 1e-12 or a non-finite entry
/// throws Error(DegenerateGram). Returns coefficients on the raw columns.
std::vector<double> solve_gram(const std::vector<std::vector<double>>& gram,
                               const std::vector<double>& rhs);

}  // namespace detail

}  // namespace tacfit

#endif  // TACFIT_LINEAR_PROJECTION_HPP
