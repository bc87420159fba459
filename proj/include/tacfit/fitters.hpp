#ifndef TACFIT_FITTERS_HPP
#define TACFIT_FITTERS_HPP

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "tacfit/chebyshev_plane.hpp"
#include "tacfit/observations.hpp"
#include "tacfit/tac.hpp"

namespace tacfit {

/// A parameter set evaluated against a series.
struct EvaluatedModel {
  ParamSet params;
  std::vector<double> fitted;     // model at the observation times
  std::vector<double> residuals;  // T_i - fitted_i
};

/// Pointwise evaluation of the selected pattern in original (unshifted) time:
/// exponentials per rate, a constant, and a sin/cos pair per frequency.
std::vector<double> evaluate_model(const ParamSet& params, ModelKind kind,
                                   std::span<const double> times);

EvaluatedModel evaluate_against(const ParamSet& params, ModelKind kind,
                                const Observations& obs);

/// (rss, mse): residual sum of squares and rss/n.
std::pair<double, double> metrics(const Observations& obs, std::span<const double> fitted);

/// Single-exponential pipeline: the reduced error (Euclidean or max-norm) is
/// minimized over the rate by the mesh sampler, then the linear coefficients
/// are solved at the winning rate. Max-norm fitting first classifies the
/// target and throws DegenerateTargetError for cases 1-3.
FitReport fit_exp1(const Observations& obs, const ModelSpec& spec,
                   TacResult* tac_out = nullptr);

/// Biexponential pipeline over (k1, k2) restricted to k1 <= k2.
FitReport fit_exp2(const Observations& obs, const ModelSpec& spec,
                   TacResult* tac_out = nullptr);

/// Biexponential plus two sinusoids over (k1, k2, mu1, mu2).
FitReport fit_exp2_osc(const Observations& obs, const ModelSpec& spec,
                       TacResult* tac_out = nullptr);

/// Dispatches on spec.kind.
FitReport fit(const Observations& obs, const ModelSpec& spec,
              TacResult* tac_out = nullptr);

/// The scalar objective minimized by the exp1 pipeline (e2 or e_inf per the
/// spec's norm), with degenerate samples mapped to a huge finite sentinel so
/// the mesh sampler can route around them. Used for error-curve export.
std::function<double(double)> reduced_objective(const ModelSpec& spec,
                                                const Observations& obs);

}  // namespace tacfit

#endif  // TACFIT_FITTERS_HPP
