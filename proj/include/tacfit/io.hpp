#ifndef TACFIT_IO_HPP
#define TACFIT_IO_HPP

#include <optional>
#include <ostream>
#include <string>

#include "json.hpp"
#include "tacfit/fitters.hpp"
#include "tacfit/observations.hpp"
#include "tacfit/tac.hpp"

namespace tacfit {

/// Command-line front-end configuration. Mirrors ModelSpec plus the output
/// destinations.
struct RunConfig {
  std::string input_path;
  ModelKind model = ModelKind::Exp1;
  NormKind norm = NormKind::L2;
  Interval k_range{-10.0, -1e-9};
  std::optional<Interval> mu_range;
  int mesh = 10;
  double alpha = 1e-9;
  double tie_tol = 1e-12;
  int threads = 1;
  std::string report_path;       // empty: report printed to stdout
  std::string residuals_path;    // empty: skipped
  std::string error_curve_path;  // empty: skipped; exp1 only
  int error_curve_samples = 200;
  bool trace = false;

  ModelSpec to_model_spec() const;
  void validate() const;
};

/// Parses a two-column numeric series: the delimiter (comma, tab or
/// whitespace) is auto-detected per file, '#' lines are skipped, and a single
/// leading non-numeric row is treated as a header. Throws ParseError with the
/// offending line number, then applies validate_observations.
Observations read_series(const std::string& path);

/// Shortest round-trip decimal form of a double.
std::string format_double(double value);

/// The JSON report for a completed fit; `tac` adds the iteration trace.
nlohmann::ordered_json report_to_json(const FitReport& report,
                                      const TacResult* tac = nullptr);

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitParse = 2;
inline constexpr int kExitDegenerate = 3;
inline constexpr int kExitBudget = 4;

int exit_status_for(Errc code) noexcept;

/// Executes the configured fit end to end: reads the series, runs the
/// matching pipeline, writes the JSON report plus optional residual and
/// error-curve CSVs. On failure emits a machine-readable error object and
/// returns the mapped nonzero status.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace tacfit

#endif  // TACFIT_IO_HPP
