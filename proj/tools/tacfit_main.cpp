#include <cctype>
#include <charconv>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "tacfit/io.hpp"

namespace {

tacfit::Interval parse_interval(const std::string& text, const std::string& flag) {
  const std::size_t colon = text.find(':');
  if (colon == std::string::npos) {
    throw CLI::ValidationError(flag, "expected LO:HI, got '" + text + "'");
  }
  const auto parse_one = [&](const std::string& part) {
    double value = 0.0;
    const char* begin = part.data();
    const char* end = begin + part.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
      throw CLI::ValidationError(flag, "'" + part + "' is not a number");
    }
    return value;
  };
  return {parse_one(text.substr(0, colon)), parse_one(text.substr(colon + 1))};
}

// PATH or PATH:SAMPLES; a trailing all-digit suffix is the sample count.
void parse_error_curve(const std::string& text, tacfit::RunConfig& config) {
  const std::size_t colon = text.rfind(':');
  if (colon != std::string::npos && colon + 1 < text.size()) {
    const std::string suffix = text.substr(colon + 1);
    if (std::all_of(suffix.begin(), suffix.end(),
                    [](unsigned char c) { return std::isdigit(c); })) {
      config.error_curve_path = text.substr(0, colon);
      config.error_curve_samples = std::stoi(suffix);
      return;
    }
  }
  config.error_curve_path = text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "tacfit - guess-free exponential-decay fitting by sampling the reduced "
      "error over the decay rate(s)"};

  tacfit::RunConfig config;
  std::string model = "exp1";
  std::string norm = "l2";
  std::string k_range;
  std::string mu_range;
  std::string error_curve;

  app.add_option("--input", config.input_path, "two-column series file (t, T)")
      ->required();
  app.add_option("--model", model, "exp1|exp2|exp2osc (default exp1)")
      ->check(CLI::IsMember({"exp1", "exp2", "exp2osc"}));
  app.add_option("--norm", norm, "l2|linf (default l2; linf is exp1-only)")
      ->check(CLI::IsMember({"l2", "linf"}));
  app.add_option("--k-range", k_range, "rate search interval LO:HI (default -10:-1e-9)");
  app.add_option("--mu-range", mu_range, "frequency search interval LO:HI (exp2osc)");
  app.add_option("--mesh", config.mesh, "default mesh divisions per axis (default 10)");
  app.add_option("--alpha", config.alpha, "stop tolerance (default 1e-9)");
  app.add_option("--tie-tol", config.tie_tol,
                 "relative argmin tie tolerance (default 1e-12; 0 = exact ties)");
  app.add_option("--threads", config.threads, "concurrent mesh evaluation (default 1)");
  app.add_option("--report", config.report_path, "JSON report path (default: stdout)");
  app.add_option("--residuals", config.residuals_path, "residuals CSV path");
  app.add_option("--error-curve", error_curve,
                 "sampled error curve CSV, PATH[:SAMPLES] (exp1 only)");
  app.add_flag("--trace", config.trace, "include the sampler trace in the report");

  CLI11_PARSE(app, argc, argv);

  try {
    config.model = model == "exp1"   ? tacfit::ModelKind::Exp1
                   : model == "exp2" ? tacfit::ModelKind::Exp2
                                     : tacfit::ModelKind::Exp2Osc;
    config.norm = norm == "l2" ? tacfit::NormKind::L2 : tacfit::NormKind::Linf;
    if (!k_range.empty()) config.k_range = parse_interval(k_range, "--k-range");
    if (!mu_range.empty()) config.mu_range = parse_interval(mu_range, "--mu-range");
    if (config.model == tacfit::ModelKind::Exp2Osc && !config.mu_range) {
      config.mu_range = tacfit::Interval{1e-6, 10.0};
    }
    if (!error_curve.empty()) parse_error_curve(error_curve, config);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  }

  return tacfit::run(config, std::cout, std::cerr);
}
