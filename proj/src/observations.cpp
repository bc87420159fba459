#include "tacfit/observations.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tacfit {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::DuplicateTime: return "duplicate_time";
    case Errc::NonFinite: return "non_finite";
    case Errc::TooFew: return "too_few";
    case Errc::DegenerateGram: return "degenerate_gram";
    case Errc::CollinearPoints: return "collinear_points";
    case Errc::NonMonotone: return "non_monotone";
    case Errc::BudgetExceeded: return "budget_exceeded";
    case Errc::ObjectiveError: return "objective_error";
    case Errc::DegenerateTarget: return "degenerate_target";
    case Errc::ParseError: return "parse_error";
    case Errc::InvalidSpec: return "invalid_spec";
  }
  return "unknown";
}

const char* model_kind_name(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::Exp1: return "exp1";
    case ModelKind::Exp2: return "exp2";
    case ModelKind::Exp2Osc: return "exp2osc";
  }
  return "unknown";
}

const char* norm_kind_name(NormKind norm) noexcept {
  return norm == NormKind::L2 ? "l2" : "linf";
}

Observations validate_observations(std::vector<std::pair<double, double>> raw_pairs) {
  if (raw_pairs.size() < 3) {
    throw Error(Errc::TooFew, "need at least 3 observations, got " +
                                  std::to_string(raw_pairs.size()));
  }
  for (const auto& [t, v] : raw_pairs) {
    if (!std::isfinite(t) || !std::isfinite(v)) {
      throw Error(Errc::NonFinite, "non-finite observation entry");
    }
  }
  std::stable_sort(raw_pairs.begin(), raw_pairs.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < raw_pairs.size(); ++i) {
    if (raw_pairs[i].first == raw_pairs[i - 1].first) {
      throw Error(Errc::DuplicateTime,
                  "duplicate timestamp t = " + std::to_string(raw_pairs[i].first));
    }
  }
  Observations obs;
  obs.times.reserve(raw_pairs.size());
  obs.values.reserve(raw_pairs.size());
  for (const auto& [t, v] : raw_pairs) {
    obs.times.push_back(t);
    obs.values.push_back(v);
  }
  return obs;
}

void ModelSpec::validate() const {
  auto check_interval = [](const Interval& iv, const char* name) {
    if (!(iv.lo < iv.hi)) {
      throw Error(Errc::InvalidSpec, std::string(name) + ": lo must be < hi");
    }
    if (iv.lo <= 0.0 && 0.0 <= iv.hi) {
      throw Error(Errc::InvalidSpec, std::string(name) + ": must not contain 0");
    }
  };
  check_interval(k_interval, "k_interval");
  if (norm == NormKind::Linf && kind != ModelKind::Exp1) {
    throw Error(Errc::InvalidSpec, "max-norm fitting is only supported for exp1");
  }
  if (kind == ModelKind::Exp2Osc) {
    if (!mu_interval) {
      throw Error(Errc::InvalidSpec, "exp2osc requires a mu interval");
    }
    check_interval(*mu_interval, "mu_interval");
    if (mu_interval->lo <= 0.0) {
      throw Error(Errc::InvalidSpec, "mu_interval must be positive");
    }
  }
  if (mesh < 2) {
    throw Error(Errc::InvalidSpec, "mesh must be at least 2");
  }
  if (!(alpha > 0.0)) {
    throw Error(Errc::InvalidSpec, "alpha must be positive");
  }
  if (argmin_tie_tol < 0.0) {
    throw Error(Errc::InvalidSpec, "argmin_tie_tol must be nonnegative");
  }
  if (threads < 1) {
    throw Error(Errc::InvalidSpec, "threads must be at least 1");
  }
}

}  // namespace tacfit
