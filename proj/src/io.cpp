#include "tacfit/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

namespace tacfit {

using nlohmann::ordered_json;

ModelSpec RunConfig::to_model_spec() const {
  ModelSpec spec;
  spec.kind = model;
  spec.norm = norm;
  spec.k_interval = k_range;
  spec.mu_interval = mu_range;
  spec.mesh = mesh;
  spec.alpha = alpha;
  spec.argmin_tie_tol = tie_tol;
  spec.threads = threads;
  return spec;
}

void RunConfig::validate() const {
  if (input_path.empty()) {
    throw Error(Errc::InvalidSpec, "input path is required");
  }
  const std::vector<const std::string*> outputs{&report_path, &residuals_path,
                                                &error_curve_path};
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    for (std::size_t j = i + 1; j < outputs.size(); ++j) {
      if (!outputs[i]->empty() && *outputs[i] == *outputs[j]) {
        throw Error(Errc::InvalidSpec, "output paths must be distinct");
      }
    }
  }
  if (!error_curve_path.empty()) {
    if (model != ModelKind::Exp1) {
      throw Error(Errc::InvalidSpec, "error-curve export is defined for exp1 only");
    }
    if (error_curve_samples < 2) {
      throw Error(Errc::InvalidSpec, "error-curve needs at least 2 samples");
    }
  }
  to_model_spec().validate();
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

bool parse_number(std::string_view field, double& value) {
  field = trim(field);
  if (field.empty()) return false;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  return ec == std::errc() && ptr == end;
}

// Splits on the detected delimiter; delimiter 0 means any whitespace run.
std::vector<std::string_view> split_fields(std::string_view line, char delim) {
  std::vector<std::string_view> fields;
  if (delim == 0) {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      std::size_t start = i;
      while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
      if (i > start) fields.push_back(line.substr(start, i - start));
    }
  } else {
    std::size_t start = 0;
    while (true) {
      const std::size_t pos = line.find(delim, start);
      fields.push_back(line.substr(start, pos - start));
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
  }
  return fields;
}

}  // namespace

Observations read_series(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError(0, "cannot open input file: " + path);
  }
  std::vector<std::pair<double, double>> pairs;
  std::string raw;
  std::size_t lineno = 0;
  char delim = 0;
  bool delim_known = false;
  bool header_allowed = true;

  while (std::getline(in, raw)) {
    ++lineno;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (!delim_known) {
      if (line.find(',') != std::string_view::npos) {
        delim = ',';
      } else if (line.find('\t') != std::string_view::npos) {
        delim = '\t';
      } else {
        delim = 0;  // whitespace
      }
      delim_known = true;
    }
    const auto fields = split_fields(line, delim);
    double t = 0.0, v = 0.0;
    const bool ok =
        fields.size() == 2 && parse_number(fields[0], t) && parse_number(fields[1], v);
    if (!ok) {
      if (header_allowed) {
        header_allowed = false;
        continue;
      }
      throw ParseError(lineno, "expected two numeric columns at line " +
                                   std::to_string(lineno));
    }
    header_allowed = false;
    pairs.emplace_back(t, v);
  }
  return validate_observations(std::move(pairs));
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

namespace {

ordered_json params_to_json(const FitReport& report) {
  ordered_json p;
  const ParamSet& ps = report.params;
  if (report.spec.kind == ModelKind::Exp1) {
    p["k"] = ps.rates[0];
    p["lambda1"] = ps.linear[0];
    p["lambda2"] = ps.linear[1];
    return p;
  }
  p["k1"] = ps.rates[0];
  p["k2"] = ps.rates[1];
  if (report.spec.kind == ModelKind::Exp2Osc) {
    p["mu1"] = ps.frequencies[0];
    p["mu2"] = ps.frequencies[1];
  }
  p["lambda1"] = ps.linear[0];
  p["lambda2"] = ps.linear[1];
  p["lambda3"] = ps.linear[2];
  if (report.spec.kind == ModelKind::Exp2Osc) {
    p["beta1"] = ps.linear[3];
    p["beta2"] = ps.linear[4];
    p["beta3"] = ps.linear[5];
    p["beta4"] = ps.linear[6];
  }
  return p;
}

ordered_json interval_to_json(const Interval& iv) {
  return ordered_json::array({iv.lo, iv.hi});
}

ordered_json trace_to_json(const TacResult& tac) {
  ordered_json arr = ordered_json::array();
  for (const TacIteration& it : tac.trace) {
    ordered_json rec;
    rec["bracket"] = ordered_json::array();
    for (const Interval& iv : it.bracket) rec["bracket"].push_back(interval_to_json(iv));
    rec["mesh"] = it.mesh;
    rec["argmin"] = it.argmin;
    rec["min_value"] = it.min_value;
    rec["branches"] = it.branches;
    arr.push_back(std::move(rec));
  }
  return arr;
}

ordered_json witness_to_json(const TargetClass& cls) {
  ordered_json w;
  if (const auto* cb = std::get_if<ConstantBest>(&cls)) {
    w["constant"] = cb->value;
  } else if (const auto* lim = std::get_if<LimitAtMinusInfinity>(&cls)) {
    w["limit"] = lim->limit;
  } else if (const auto* line = std::get_if<LimitAtZeroLine>(&cls)) {
    w["slope"] = line->slope;
    w["intercept"] = line->intercept;
  }
  return w;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) {
    throw Error(Errc::InvalidSpec, "cannot open output file: " + path);
  }
  out << text;
}

}  // namespace

ordered_json report_to_json(const FitReport& report, const TacResult* tac) {
  ordered_json j;
  j["model"] = model_kind_name(report.spec.kind);
  j["norm"] = norm_kind_name(report.spec.norm);
  j["params"] = params_to_json(report);
  j["rss"] = report.rss;
  j["mse"] = report.mse;
  j["n"] = report.residuals.size();
  j["iterations"] = report.tac_iterations;
  j["evaluations"] = report.evaluations;
  j["wall_time_seconds"] = report.wall_time_seconds;
  if (report.spec.norm == NormKind::Linf) {
    j["classification"] = "interior_minimum";
    if (report.minimax_radius) j["minimax_radius"] = *report.minimax_radius;
  }
  if (tac) j["trace"] = trace_to_json(*tac);
  return j;
}

int exit_status_for(Errc code) noexcept {
  switch (code) {
    case Errc::ParseError:
    case Errc::TooFew:
    case Errc::NonFinite:
    case Errc::DuplicateTime:
    case Errc::InvalidSpec:
      return kExitParse;
    case Errc::DegenerateTarget:
      return kExitDegenerate;
    case Errc::BudgetExceeded:
      return kExitBudget;
    default:
      return kExitFailure;
  }
}

namespace {

void emit_report(const RunConfig& config, const ordered_json& j, std::ostream& out) {
  const std::string text = j.dump(2) + "\n";
  if (config.report_path.empty()) {
    out << text;
  } else {
    write_text_file(config.report_path, text);
  }
}

void write_residuals_csv(const RunConfig& config, const Observations& obs,
                         const FitReport& report) {
  std::ofstream out(config.residuals_path);
  if (!out) {
    throw Error(Errc::InvalidSpec, "cannot open output file: " + config.residuals_path);
  }
  const std::vector<double> fitted =
      evaluate_model(report.params, report.spec.kind, obs.times);
  out << "t,T,fitted,residual\n";
  for (std::size_t i = 0; i < obs.size(); ++i) {
    out << format_double(obs.times[i]) << ',' << format_double(obs.values[i]) << ','
        << format_double(fitted[i]) << ',' << format_double(obs.values[i] - fitted[i])
        << '\n';
  }
}

void write_error_curve_csv(const RunConfig& config, const ModelSpec& spec,
                           const Observations& obs) {
  std::ofstream out(config.error_curve_path);
  if (!out) {
    throw Error(Errc::InvalidSpec, "cannot open output file: " + config.error_curve_path);
  }
  const auto objective = reduced_objective(spec, obs);
  out << "k,error\n";
  const int samples = config.error_curve_samples;
  for (int i = 0; i < samples; ++i) {
    const double k = i == samples - 1
                         ? spec.k_interval.hi
                         : spec.k_interval.lo +
                               spec.k_interval.width() * i / (samples - 1);
    const double value = objective(k);
    if (value < std::numeric_limits<double>::max()) {
      out << format_double(k) << ',' << format_double(value) << '\n';
    }
  }
}

}  // namespace

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  std::size_t n_loaded = 0;
  try {
    config.validate();
    const Observations obs = read_series(config.input_path);
    n_loaded = obs.size();
    const ModelSpec spec = config.to_model_spec();

    TacResult tac;
    const FitReport report = fit(obs, spec, &tac);

    emit_report(config, report_to_json(report, config.trace ? &tac : nullptr), out);
    if (!config.residuals_path.empty()) write_residuals_csv(config, obs, report);
    if (!config.error_curve_path.empty()) write_error_curve_csv(config, spec, obs);
    return kExitSuccess;
  } catch (const DegenerateTargetError& e) {
    ordered_json j;
    j["error"] = {{"type", errc_name(e.code())},
                  {"classification", target_case_name(e.witness())},
                  {"witness", witness_to_json(e.witness())}};
    j["model"] = model_kind_name(config.model);
    j["norm"] = norm_kind_name(config.norm);
    j["n"] = n_loaded;
    try {
      emit_report(config, j, out);
    } catch (const std::exception& io_error) {
      err << io_error.what() << "\n";
    }
    return kExitDegenerate;
  } catch (const ParseError& e) {
    ordered_json j;
    j["error"] = {{"type", errc_name(e.code())}, {"message", e.what()}};
    if (e.line() > 0) j["error"]["line"] = e.line();
    out << j.dump(2) << "\n";
    err << e.what() << "\n";
    return kExitParse;
  } catch (const Error& e) {
    ordered_json j;
    j["error"] = {{"type", errc_name(e.code())}, {"message", e.what()}};
    out << j.dump(2) << "\n";
    err << e.what() << "\n";
    return exit_status_for(e.code());
  } catch (const std::exception& e) {
    ordered_json j;
    j["error"] = {{"type", "exception"}, {"message", e.what()}};
    out << j.dump(2) << "\n";
    err << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace tacfit
