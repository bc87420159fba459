#include "tacfit/linear_projection.hpp"

#include <cmath>
#include <cstddef>
#include <string>

namespace tacfit {

namespace {

constexpr double kGramEps = 1e-12;  // relative pivot threshold

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

std::vector<double> exp_basis(double k, const Observations& obs) {
  const double t1 = obs.times.front();
  std::vector<double> column(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    column[i] = std::exp(k * (obs.times[i] - t1));
  }
  return column;
}

BasisMatrix build_model_basis(std::span<const double> rates,
                              std::span<const double> frequencies,
                              const Observations& obs) {
  const std::size_t n = obs.size();
  const double t1 = obs.times.front();
  BasisMatrix basis;
  for (std::size_t j = 0; j < rates.size(); ++j) {
    basis.columns.push_back(exp_basis(rates[j], obs));
    basis.labels.push_back("exp(k" + std::to_string(j + 1) + ".)");
    basis.coeff_unscale.push_back(std::exp(-rates[j] * t1));
  }
  basis.columns.emplace_back(n, 1.0);
  basis.labels.emplace_back("const");
  basis.coeff_unscale.push_back(1.0);
  for (std::size_t j = 0; j < frequencies.size(); ++j) {
    std::vector<double> s(n), c(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = std::sin(frequencies[j] * obs.times[i]);
      c[i] = std::cos(frequencies[j] * obs.times[i]);
    }
    basis.columns.push_back(std::move(s));
    basis.labels.push_back("sin(mu" + std::to_string(j + 1) + ".)");
    basis.coeff_unscale.push_back(1.0);
    basis.columns.push_back(std::move(c));
    basis.labels.push_back("cos(mu" + std::to_string(j + 1) + ".)");
    basis.coeff_unscale.push_back(1.0);
  }
  return basis;
}

std::pair<double, double> lambdas_for_k(double k, const Observations& obs) {
  const std::vector<double> e = exp_basis(k, obs);
  const std::vector<double>& values = obs.values;
  const double n = static_cast<double>(obs.size());

  double ee = 0.0, ei = 0.0, te = 0.0, ti = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    ee += e[i] * e[i];
    ei += e[i];
    te += values[i] * e[i];
    ti += values[i];
  }
  const double denom = n * ee - ei * ei;
  if (!std::isfinite(denom) || denom <= kGramEps * n * ee) {
    throw Error(Errc::DegenerateGram,
                "exponential column numerically collinear with constants at k = " +
                    std::to_string(k));
  }
  const double lambda1_shifted = (n * te - ei * ti) / denom;
  const double lambda2 = (ee * ti - ei * te) / denom;
  return {lambda1_shifted * std::exp(-k * obs.times.front()), lambda2};
}

namespace detail {

std::vector<double> solve_gram(const std::vector<std::vector<double>>& gram,
                               const std::vector<double>& rhs) {
  const std::size_t p = rhs.size();
  std::vector<double> norms(p);
  for (std::size_t j = 0; j < p; ++j) {
    const double nn = std::sqrt(gram[j][j]);
    if (!std::isfinite(nn) || nn == 0.0) {
      throw Error(Errc::DegenerateGram, "basis column " + std::to_string(j) +
                                            " has zero or non-finite norm");
    }
    norms[j] = nn;
  }

  // Column-normalized system; the unit diagonal makes the pivot test
  // scale-free.
  std::vector<std::vector<double>> g(p, std::vector<double>(p + 1));
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      const double gij = gram[i][j] / (norms[i] * norms[j]);
      if (!std::isfinite(gij)) {
        throw Error(Errc::DegenerateGram, "non-finite Gram entry");
      }
      g[i][j] = gij;
    }
    g[i][p] = rhs[i] / norms[i];
  }

  // Gaussian elimination with partial pivoting.
  for (std::size_t col = 0; col < p; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < p; ++r) {
      if (std::abs(g[r][col]) > std::abs(g[pivot][col])) pivot = r;
    }
    if (std::abs(g[pivot][col]) <= kGramEps) {
      throw Error(Errc::DegenerateGram,
                  "Gram pivot collapsed at column " + std::to_string(col));
    }
    if (pivot != col) std::swap(g[pivot], g[col]);
    for (std::size_t r = col + 1; r < p; ++r) {
      const double f = g[r][col] / g[col][col];
      for (std::size_t c = col; c <= p; ++c) g[r][c] -= f * g[col][c];
    }
  }
  std::vector<double> normalized(p);
  for (std::size_t row = p; row-- > 0;) {
    double s = g[row][p];
    for (std::size_t c = row + 1; c < p; ++c) s -= g[row][c] * normalized[c];
    normalized[row] = s / g[row][row];
  }
  std::vector<double> solved(p);
  for (std::size_t j = 0; j < p; ++j) solved[j] = normalized[j] / norms[j];
  return solved;
}

Projection project_l2_columns(std::span<const std::vector<double>* const> columns,
                              std::span<const double> coeff_unscale,
                              std::span<const double> values) {
  const std::size_t p = columns.size();
  const std::size_t n = values.size();
  if (p == 0 || p > n) {
    throw Error(Errc::InvalidSpec, "basis must have between 1 and n columns");
  }

  std::vector<std::vector<double>> gram(p, std::vector<double>(p));
  std::vector<double> rhs(p);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      gram[i][j] = gram[j][i] = dot(*columns[i], *columns[j]);
    }
    rhs[i] = dot(values, *columns[i]);
  }
  const std::vector<double> solved = solve_gram(gram, rhs);

  Projection result;
  result.coeffs.resize(p);
  for (std::size_t j = 0; j < p; ++j) {
    result.coeffs[j] = solved[j] * coeff_unscale[j];
  }
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double fit = 0.0;
    for (std::size_t j = 0; j < p; ++j) fit += solved[j] * (*columns[j])[i];
    const double r = fit - values[i];
    rss += r * r;
  }
  result.rss = rss;
  return result;
}

}  // namespace detail

Projection project_l2(const BasisMatrix& basis, const Observations& obs) {
  std::vector<const std::vector<double>*> cols;
  cols.reserve(basis.columns.size());
  for (const auto& c : basis.columns) {
    if (c.size() != obs.size()) {
      throw Error(Errc::InvalidSpec, "basis column length must equal n");
    }
    cols.push_back(&c);
  }
  return detail::project_l2_columns(cols, basis.coeff_unscale, obs.values);
}

double e2(std::span<const double> rates, std::span<const double> frequencies,
          const Observations& obs) {
  const BasisMatrix basis = build_model_basis(rates, frequencies, obs);
  return std::sqrt(project_l2(basis, obs).rss);
}

double e2(double k, const Observations& obs) {
  return e2(std::span<const double>(&k, 1), {}, obs);
}

}  // namespace tacfit
