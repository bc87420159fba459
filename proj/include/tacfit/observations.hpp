#ifndef TACFIT_OBSERVATIONS_HPP
#define TACFIT_OBSERVATIONS_HPP

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "tacfit/errors.hpp"

namespace tacfit {

/// A strictly time-ordered sample series. Instances are immutable after
/// construction and safe to share across threads.
struct Observations {
  std::vector<double> times;   // strictly increasing, finite
  std::vector<double> values;  // same length as times, finite

  std::size_t size() const noexcept { return times.size(); }
};

/// Validates and normalizes raw (time, value) pairs: sorts by time, rejects
/// duplicate timestamps, non-finite entries and series shorter than 3.
/// Idempotent: feeding the output back in reproduces it exactly.
Observations validate_observations(std::vector<std::pair<double, double>> raw_pairs);

/// Closed interval endpoints for a nonlinear-parameter search axis.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const noexcept { return hi - lo; }
  bool contains(double x) const noexcept { return lo <= x && x <= hi; }
};

enum class ModelKind { Exp1, Exp2, Exp2Osc };
enum class NormKind { L2, Linf };

const char* model_kind_name(ModelKind kind) noexcept;
const char* norm_kind_name(NormKind norm) noexcept;

/// Which pattern is fitted and how the outer search is configured.
struct ModelSpec {
  ModelKind kind = ModelKind::Exp1;
  NormKind norm = NormKind::L2;
  Interval k_interval{-10.0, -1e-9};
  std::optional<Interval> mu_interval;  // required iff kind == Exp2Osc
  int mesh = 10;                        // default divisions per axis (n_0)
  double alpha = 1e-9;                  // stop tolerance
  double argmin_tie_tol = 1e-12;        // relative tie tolerance for argmin sets
  int threads = 1;                      // mesh evaluation concurrency

  /// Throws Error(InvalidSpec) when a field combination is unusable:
  /// Linf with a multi-exponential kind, missing or nonpositive mu interval,
  /// an interval straddling zero, nonpositive alpha or mesh < 2.
  void validate() const;
};

/// Fitted parameters in original-time coordinates.
struct ParamSet {
  std::vector<double> rates;        // k, or (k1, k2) sorted ascending
  std::vector<double> frequencies;  // (mu1, mu2) sorted ascending, may be empty
  std::vector<double> linear;       // lambdas then betas, in basis order
};

/// Result of a complete fitting pipeline.
struct FitReport {
  ModelSpec spec;
  ParamSet params;
  double rss = 0.0;
  double mse = 0.0;
  std::vector<double> residuals;  // T_i - fitted_i
  int tac_iterations = 0;
  long long evaluations = 0;
  double wall_time_seconds = 0.0;
  std::optional<double> minimax_radius;  // set for Linf fits only
};

}  // namespace tacfit

#endif  // TACFIT_OBSERVATIONS_HPP
