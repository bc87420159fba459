#include "tacfit/fitters.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <unordered_map>
#include <utility>

#include "tacfit/linear_projection.hpp"

namespace tacfit {

namespace {

// Degenerate samples are routed around, not propagated: the Gram gap
// collapses near k -> 0 and on coincident-rate diagonals, both far from any
// genuine minimum. A huge finite value keeps the sign analysis clean.
constexpr double kSentinel = std::numeric_limits<double>::max();
constexpr double kDupRelTol = 1e-8;

bool nearly_equal(double a, double b) {
  return std::abs(a - b) <= kDupRelTol * std::max(std::abs(a), std::abs(b));
}

enum class ColKind : std::uint8_t { Exp = 0, Sin = 1, Cos = 2, Const = 3 };

struct ColKey {
  ColKind kind = ColKind::Const;
  double value = 0.0;  // rate or frequency

  bool operator==(const ColKey&) const = default;
  bool operator<(const ColKey& o) const {
    return kind != o.kind ? kind < o.kind : value < o.value;
  }
};

struct PairKey {
  ColKey a, b;  // canonical: a <= b
  bool operator==(const PairKey&) const = default;
};

struct ColKeyHash {
  std::size_t operator()(const ColKey& k) const {
    return std::hash<double>()(k.value) * 4u + static_cast<std::size_t>(k.kind);
  }
};

struct PairKeyHash {
  std::size_t operator()(const PairKey& p) const {
    const std::size_t h = ColKeyHash()(p.a);
    return (h << 1) ^ (h >> 3) ^ ColKeyHash()(p.b);
  }
};

struct RobustSolve {
  std::vector<double> coeffs;  // full layout, zeros for dropped columns
  double rss = 0.0;
};

/// All the per-series state the pipelines share: basis columns and their
/// pairwise inner products, both keyed by the nonlinear value so the mesh
/// sampler's repeated visits to the same axis values cost one lookup.
/// Thread-safe; concurrent recomputation of a missing entry is harmless.
class Workspace {
 public:
  using Column = std::shared_ptr<const std::vector<double>>;

  explicit Workspace(const Observations& obs)
      : obs_(obs), ones_(std::make_shared<const std::vector<double>>(obs.size(), 1.0)) {}

  /// Projects T onto the basis of the nonlinear point. With dedup enabled, a
  /// rate or frequency nearly equal to an earlier one contributes no column;
  /// its coefficients report as zero in the full layout
  /// [exp per rate..., const, (sin, cos) per frequency...].
  RobustSolve solve(std::span<const double> rates, std::span<const double> frequencies,
                    bool dedup) {
    std::vector<ColKey> keys;
    std::vector<Column> cols;
    std::vector<double> unscale;
    std::vector<std::size_t> slots;
    const double t1 = obs_.times.front();

    auto push = [&](ColKey key, double scale_factor, std::size_t slot) {
      keys.push_back(key);
      cols.push_back(column(key));
      unscale.push_back(scale_factor);
      slots.push_back(slot);
    };

    std::vector<double> kept;
    for (std::size_t j = 0; j < rates.size(); ++j) {
      const double k = rates[j];
      if (dedup && std::any_of(kept.begin(), kept.end(),
                               [&](double prev) { return nearly_equal(prev, k); })) {
        continue;
      }
      kept.push_back(k);
      push({ColKind::Exp, k}, std::exp(-k * t1), j);
    }
    push({ColKind::Const, 0.0}, 1.0, rates.size());
    kept.clear();
    for (std::size_t j = 0; j < frequencies.size(); ++j) {
      const double mu = frequencies[j];
      if (dedup && std::any_of(kept.begin(), kept.end(),
                               [&](double prev) { return nearly_equal(prev, mu); })) {
        continue;
      }
      kept.push_back(mu);
      push({ColKind::Sin, mu}, 1.0, rates.size() + 1 + 2 * j);
      push({ColKind::Cos, mu}, 1.0, rates.size() + 2 + 2 * j);
    }

    const std::size_t p = keys.size();
    std::vector<std::vector<double>> gram(p, std::vector<double>(p));
    std::vector<double> rhs(p);
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        gram[i][j] = gram[j][i] = pair_dot(keys[i], *cols[i], keys[j], *cols[j]);
      }
      rhs[i] = values_dot(keys[i], *cols[i]);
    }
    const std::vector<double> solved = detail::solve_gram(gram, rhs);

    RobustSolve out;
    out.coeffs.assign(rates.size() + 1 + 2 * frequencies.size(), 0.0);
    for (std::size_t j = 0; j < p; ++j) out.coeffs[slots[j]] = solved[j] * unscale[j];
    double rss = 0.0;
    for (std::size_t i = 0; i < obs_.size(); ++i) {
      double fit = 0.0;
      for (std::size_t j = 0; j < p; ++j) fit += solved[j] * (*cols[j])[i];
      const double r = fit - obs_.values[i];
      rss += r * r;
    }
    out.rss = rss;
    return out;
  }

  RobustSolve robust_solve(std::span<const double> rates,
                           std::span<const double> frequencies) {
    try {
      return solve(rates, frequencies, false);
    } catch (const Error& e) {
      if (e.code() != Errc::DegenerateGram) throw;
    }
    return solve(rates, frequencies, true);
  }

  double robust_error(std::span<const double> rates,
                      std::span<const double> frequencies) {
    try {
      return std::sqrt(robust_solve(rates, frequencies).rss);
    } catch (const Error& e) {
      if (e.code() == Errc::DegenerateGram) return kSentinel;
      throw;
    }
  }

 private:
  Column column(const ColKey& key) {
    if (key.kind == ColKind::Const) return ones_;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = columns_.find(key);
      if (it != columns_.end()) return it->second;
    }
    std::vector<double> col(obs_.size());
    switch (key.kind) {
      case ColKind::Exp: {
        const double t1 = obs_.times.front();
        for (std::size_t i = 0; i < col.size(); ++i) {
          col[i] = std::exp(key.value * (obs_.times[i] - t1));
        }
        break;
      }
      case ColKind::Sin:
        for (std::size_t i = 0; i < col.size(); ++i) {
          col[i] = std::sin(key.value * obs_.times[i]);
        }
        break;
      case ColKind::Cos:
        for (std::size_t i = 0; i < col.size(); ++i) {
          col[i] = std::cos(key.value * obs_.times[i]);
        }
        break;
      case ColKind::Const:
        break;
    }
    auto made = std::make_shared<const std::vector<double>>(std::move(col));
    std::lock_guard<std::mutex> lock(mutex_);
    if (columns_.size() > 4096) columns_.clear();
    return columns_.try_emplace(key, std::move(made)).first->second;
  }

  double pair_dot(ColKey ka, const std::vector<double>& ca, ColKey kb,
                  const std::vector<double>& cb) {
    if (kb < ka) {
      std::swap(ka, kb);
      return pair_dot_ordered({ka, kb}, cb, ca);
    }
    return pair_dot_ordered({ka, kb}, ca, cb);
  }

  double pair_dot_ordered(const PairKey& key, const std::vector<double>& ca,
                          const std::vector<double>& cb) {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = dots_.find(key);
      if (it != dots_.end()) return it->second;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < ca.size(); ++i) s += ca[i] * cb[i];
    std::lock_guard<std::mutex> lock(mutex_);
    if (dots_.size() > 500000) dots_.clear();
    return dots_.try_emplace(key, s).first->second;
  }

  double values_dot(const ColKey& key, const std::vector<double>& col) {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = value_dots_.find(key);
      if (it != value_dots_.end()) return it->second;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < col.size(); ++i) s += obs_.values[i] * col[i];
    std::lock_guard<std::mutex> lock(mutex_);
    if (value_dots_.size() > 100000) value_dots_.clear();
    return value_dots_.try_emplace(key, s).first->second;
  }

  const Observations& obs_;
  Column ones_;
  std::mutex mutex_;
  std::unordered_map<ColKey, Column, ColKeyHash> columns_;
  std::unordered_map<PairKey, double, PairKeyHash> dots_;
  std::unordered_map<ColKey, double, ColKeyHash> value_dots_;
};

double value_scale(const Observations& obs) {
  double s = 0.0;
  for (double v : obs.values) s = std::max(s, std::abs(v));
  return s > 0.0 ? s : 1.0;
}

// The minimized objective is normalized by the data magnitude: the argmin-tie
// tolerance compares values against 1+|min|, which would otherwise merge wide
// plateaus for series of tiny amplitude (stress-relaxation data are of order
// 1e-10).
std::function<double(double)> scaled_objective_1d(
    const std::function<double(double)>& raw, double scale) {
  return [raw, scale](double k) {
    const double v = raw(k);
    return v >= kSentinel ? v : v / scale;
  };
}

TacConfig make_tac_config(const ModelSpec& spec) {
  TacConfig cfg;
  cfg.axes = {spec.k_interval};
  if (spec.kind != ModelKind::Exp1) {
    cfg.axes.push_back(spec.k_interval);
    cfg.ordered_groups.push_back({0, 1});
  }
  if (spec.kind == ModelKind::Exp2Osc) {
    cfg.axes.push_back(*spec.mu_interval);
    cfg.axes.push_back(*spec.mu_interval);
    cfg.ordered_groups.push_back({2, 3});
  }
  cfg.initial_divisions = spec.mesh;
  cfg.alpha = spec.alpha;
  cfg.tie_tol = spec.argmin_tie_tol;
  cfg.threads = spec.threads;
  return cfg;
}

FitReport finish_report(const Observations& obs, const ModelSpec& spec, ParamSet params,
                        const TacResult& tac,
                        std::chrono::steady_clock::time_point start,
                        std::optional<double> minimax_radius, TacResult* tac_out) {
  FitReport report;
  report.spec = spec;
  report.params = std::move(params);
  const std::vector<double> fitted =
      evaluate_model(report.params, spec.kind, obs.times);
  std::tie(report.rss, report.mse) = metrics(obs, fitted);
  report.residuals.resize(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    report.residuals[i] = obs.values[i] - fitted[i];
  }
  report.tac_iterations = tac.iterations;
  report.evaluations = tac.evaluations;
  report.minimax_radius = minimax_radius;
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (tac_out) *tac_out = tac;
  return report;
}

}  // namespace

std::vector<double> evaluate_model(const ParamSet& params, ModelKind kind,
                                   std::span<const double> times) {
  const std::size_t n_rates = kind == ModelKind::Exp1 ? 1 : 2;
  const std::size_t n_freqs = kind == ModelKind::Exp2Osc ? 2 : 0;
  const std::size_t n_linear = n_rates + 1 + 2 * n_freqs;
  if (params.rates.size() != n_rates || params.frequencies.size() != n_freqs ||
      params.linear.size() != n_linear) {
    throw std::invalid_argument("evaluate_model: parameter shape does not match kind");
  }
  std::vector<double> out(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    double v = 0.0;
    for (std::size_t j = 0; j < n_rates; ++j) {
      v += params.linear[j] * std::exp(params.rates[j] * t);
    }
    v += params.linear[n_rates];
    for (std::size_t j = 0; j < n_freqs; ++j) {
      const double mu = params.frequencies[j];
      v += params.linear[n_rates + 1 + 2 * j] * std::sin(mu * t);
      v += params.linear[n_rates + 2 + 2 * j] * std::cos(mu * t);
    }
    out[i] = v;
  }
  return out;
}

EvaluatedModel evaluate_against(const ParamSet& params, ModelKind kind,
                                const Observations& obs) {
  EvaluatedModel em;
  em.params = params;
  em.fitted = evaluate_model(params, kind, obs.times);
  em.residuals.resize(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    em.residuals[i] = obs.values[i] - em.fitted[i];
  }
  return em;
}

std::pair<double, double> metrics(const Observations& obs, std::span<const double> fitted) {
  if (fitted.size() != obs.size()) {
    throw std::invalid_argument("metrics: length mismatch");
  }
  double rss = 0.0;
  for (std::size_t i = 0; i < fitted.size(); ++i) {
    const double r = obs.values[i] - fitted[i];
    rss += r * r;
  }
  return {rss, rss / static_cast<double>(obs.size())};
}

std::function<double(double)> reduced_objective(const ModelSpec& spec,
                                                const Observations& obs) {
  if (spec.norm == NormKind::Linf) {
    return [&obs](double k) {
      try {
        return e_inf(k, obs);
      } catch (const std::exception&) {
        return kSentinel;
      }
    };
  }
  return [&obs](double k) {
    try {
      return e2(k, obs);
    } catch (const Error& e) {
      if (e.code() == Errc::DegenerateGram) return kSentinel;
      throw;
    }
  };
}

FitReport fit_exp1(const Observations& obs, const ModelSpec& spec, TacResult* tac_out) {
  spec.validate();
  if (spec.kind != ModelKind::Exp1) {
    throw std::invalid_argument("fit_exp1: spec.kind must be Exp1");
  }
  const auto start = std::chrono::steady_clock::now();

  if (spec.norm == NormKind::Linf) {
    TargetClass cls = classify_target(obs);
    if (!std::holds_alternative<InteriorMinimum>(cls)) {
      throw DegenerateTargetError(std::move(cls));
    }
  }

  const auto objective =
      scaled_objective_1d(reduced_objective(spec, obs), value_scale(obs));
  const TacResult tac = tac_minimize_1d(objective, make_tac_config(spec));
  const double k = tac.minimizer[0];

  ParamSet params;
  params.rates = {k};
  std::optional<double> radius;
  if (spec.norm == NormKind::L2) {
    const auto [l1, l2] = lambdas_for_k(k, obs);
    params.linear = {l1, l2};
  } else {
    const std::vector<double> u = exp_basis(k, obs);
    const PlaneFit pf = minimax_2basis(u, obs);
    params.linear = {pf.a * std::exp(-k * obs.times.front()), pf.b};
    radius = pf.r;
  }
  return finish_report(obs, spec, std::move(params), tac, start, radius, tac_out);
}

FitReport fit_exp2(const Observations& obs, const ModelSpec& spec, TacResult* tac_out) {
  spec.validate();
  if (spec.kind != ModelKind::Exp2) {
    throw std::invalid_argument("fit_exp2: spec.kind must be Exp2");
  }
  const auto start = std::chrono::steady_clock::now();

  Workspace ws(obs);
  const double scale = value_scale(obs);
  const auto objective = [&](std::span<const double> point) {
    const double v = ws.robust_error(point.subspan(0, 2), {});
    return v >= kSentinel ? v : v / scale;
  };
  const TacResult tac = tac_minimize_nd(objective, make_tac_config(spec));

  ParamSet params;
  params.rates = {tac.minimizer[0], tac.minimizer[1]};
  std::sort(params.rates.begin(), params.rates.end());
  params.linear = ws.robust_solve(params.rates, {}).coeffs;
  return finish_report(obs, spec, std::move(params), tac, start, std::nullopt, tac_out);
}

FitReport fit_exp2_osc(const Observations& obs, const ModelSpec& spec,
                       TacResult* tac_out) {
  spec.validate();
  if (spec.kind != ModelKind::Exp2Osc) {
    throw std::invalid_argument("fit_exp2_osc: spec.kind must be Exp2Osc");
  }
  const auto start = std::chrono::steady_clock::now();

  Workspace ws(obs);
  const double scale = value_scale(obs);
  const auto objective = [&](std::span<const double> point) {
    const double v = ws.robust_error(point.subspan(0, 2), point.subspan(2, 2));
    return v >= kSentinel ? v : v / scale;
  };
  const TacResult tac = tac_minimize_nd(objective, make_tac_config(spec));

  ParamSet params;
  params.rates = {tac.minimizer[0], tac.minimizer[1]};
  std::sort(params.rates.begin(), params.rates.end());
  params.frequencies = {tac.minimizer[2], tac.minimizer[3]};
  std::sort(params.frequencies.begin(), params.frequencies.end());
  params.linear = ws.robust_solve(params.rates, params.frequencies).coeffs;
  return finish_report(obs, spec, std::move(params), tac, start, std::nullopt, tac_out);
}

FitReport fit(const Observations& obs, const ModelSpec& spec, TacResult* tac_out) {
  switch (spec.kind) {
    case ModelKind::Exp1: return fit_exp1(obs, spec, tac_out);
    case ModelKind::Exp2: return fit_exp2(obs, spec, tac_out);
    case ModelKind::Exp2Osc: return fit_exp2_osc(obs, spec, tac_out);
  }
  throw std::invalid_argument("fit: unknown model kind");
}

}  // namespace tacfit
