#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "support/generators.hpp"
#include "tacfit/linear_projection.hpp"
#include "tacfit/oracles.hpp"
#include "tacfit/tac.hpp"

using namespace tacfit;

namespace {

TacConfig config_1d(Interval iv, double alpha, double tie_tol = 1e-12) {
  TacConfig cfg;
  cfg.axes = {iv};
  cfg.alpha = alpha;
  cfg.tie_tol = tie_tol;
  return cfg;
}

bool traces_equal(const TacResult& a, const TacResult& b) {
  if (a.trace.size() != b.trace.size()) return false;
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    const TacIteration& x = a.trace[i];
    const TacIteration& y = b.trace[i];
    if (x.mesh != y.mesh || x.branches != y.branches || x.argmin != y.argmin ||
        x.min_value != y.min_value) {
      return false;
    }
    for (std::size_t ax = 0; ax < x.bracket.size(); ++ax) {
      if (x.bracket[ax].lo != y.bracket[ax].lo || x.bracket[ax].hi != y.bracket[ax].hi) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace

TEST_CASE("sign_change_indices matches hand-counted examples") {
  CHECK(sign_change_indices(std::vector<double>{4, 2, 1, 2, 4}) ==
        std::vector<std::size_t>{2});
  CHECK(sign_change_indices(std::vector<double>{5, 4, 3, 2, 1}).empty());
  CHECK(sign_change_indices(std::vector<double>{3, 1, 2, 1, 3}) ==
        std::vector<std::size_t>{1, 2, 3});
}

TEST_CASE("sign_change_indices treats plateaus as their own sign") {
  // A zero difference breaks a monotone run twice.
  CHECK(sign_change_indices(std::vector<double>{3, 2, 2, 1}) ==
        std::vector<std::size_t>{1, 2});
}

TEST_CASE("argmin_set honors the tie tolerance") {
  CHECK(argmin_set(std::vector<double>{3, 1, 2}, 0.0) == std::vector<std::size_t>{1});
  CHECK(argmin_set(std::vector<double>{1, 1, 2}, 0.0) == std::vector<std::size_t>{0, 1});
  CHECK(argmin_set(std::vector<double>{1, 1 + 1e-15, 2}, 1e-12) ==
        std::vector<std::size_t>{0, 1});
}

TEST_CASE("tac_minimize_1d locates a quadratic minimum") {
  const auto objective = [](double k) { return (k + 3.0) * (k + 3.0); };
  const TacResult res = tac_minimize_1d(objective, config_1d({-10.0, -1e-9}, 1e-6));
  CHECK(std::abs(res.minimizer[0] + 3.0) <= 1e-6);
  CHECK(res.objective_at_min == doctest::Approx(objective(res.minimizer[0])));
  CHECK(res.final_bracket[0].contains(res.minimizer[0]));
}

TEST_CASE("tac_minimize_1d returns the endpoint for monotone objectives") {
  const TacResult inc =
      tac_minimize_1d([](double k) { return k; }, config_1d({-10.0, -1.0}, 1e-6));
  CHECK(std::abs(inc.minimizer[0] + 10.0) <= 1e-6);
  const TacResult dec =
      tac_minimize_1d([](double k) { return -k; }, config_1d({-10.0, -1.0}, 1e-6));
  CHECK(std::abs(dec.minimizer[0] + 1.0) <= 1e-6);
}

TEST_CASE("tac_minimize_1d recovers the benchmark decay rate from e2") {
  std::vector<double> times(1000);
  for (int i = 0; i < 1000; ++i) times[i] = i + 1;
  const Observations obs =
      testsupport::exp1_series(6.87654321, -1.12345678, 2.11223344, times);
  // The k -> 0 endpoint is numerically collinear with the constant column;
  // route it to a huge sentinel the way the fitting pipelines do.
  const auto objective = [&](double k) {
    try {
      return e2(k, obs);
    } catch (const Error&) {
      return std::numeric_limits<double>::max();
    }
  };
  const TacResult res = tac_minimize_1d(objective, config_1d({-10.0, -1e-9}, 1e-9));
  CHECK(std::abs(res.minimizer[0] + 1.12345678) <= 1e-8);
}

TEST_CASE("tac_minimize_1d hits random unimodal minima within alpha") {
  std::mt19937_64 rng(211);
  const Interval iv{-10.0, -1e-3};
  std::uniform_real_distribution<double> kstar_dist(-9.5, -0.5);
  const double alpha = 1e-6;
  int budget_errors = 0;
  for (int round = 0; round < 100; ++round) {
    const double kstar = kstar_dist(rng);
    const double p = (round % 3 == 0) ? 1.0 : (round % 3 == 1) ? 2.0 : 4.0;
    const auto objective = [&](double k) { return std::pow(std::abs(k - kstar), p); };
    try {
      const TacResult res = tac_minimize_1d(objective, config_1d(iv, alpha, 0.0));
      CHECK(std::abs(res.minimizer[0] - kstar) <= alpha);
    } catch (const Error& e) {
      if (e.code() == Errc::BudgetExceeded) ++budget_errors;
    }
  }
  CHECK(budget_errors == 0);
}

TEST_CASE("tac_minimize_1d handles small-sawtooth quasiconvexish objectives") {
  std::mt19937_64 rng(223);
  const Interval iv{-10.0, -0.01};
  std::uniform_real_distribution<double> kstar_dist(-8.5, -1.5);
  const double alpha = 1e-5;
  const int n0 = 10;
  const double period = 2.0 * iv.width() / n0;  // two initial grid cells
  for (int round = 0; round < 10; ++round) {
    const double kstar = kstar_dist(rng);
    const double depth =
        std::max((iv.lo - kstar) * (iv.lo - kstar), (iv.hi - kstar) * (iv.hi - kstar));
    const double amplitude = 0.01 * depth;
    const auto objective = [&](double k) {
      const double frac = (k - iv.lo) / period - std::floor((k - iv.lo) / period);
      const double tooth = std::abs(2.0 * frac - 1.0);
      return (k - kstar) * (k - kstar) + amplitude * tooth;
    };
    TacConfig cfg = config_1d(iv, alpha, 0.0);
    cfg.initial_divisions = n0;
    const TacResult res = tac_minimize_1d(objective, cfg);

    // Two-stage scan oracle for the global argmin.
    const GridScanResult coarse = grid_scan(objective, iv, 2000001);
    const double cell = iv.width() / 2000000.0;
    const GridScanResult fine = grid_scan(
        objective, {coarse.argmin - 2 * cell, coarse.argmin + 2 * cell}, 40001);
    CHECK(std::abs(res.minimizer[0] - fine.argmin) <= alpha + 1e-7);
  }
}

TEST_CASE("tac_minimize_1d brackets nest across iterations") {
  const auto objective = [](double k) { return (k + 4.5) * (k + 4.5); };
  const TacResult res = tac_minimize_1d(objective, config_1d({-10.0, -1e-3}, 1e-8));
  for (std::size_t i = 1; i < res.trace.size(); ++i) {
    CHECK(res.trace[i].bracket[0].lo >= res.trace[i - 1].bracket[0].lo);
    CHECK(res.trace[i].bracket[0].hi <= res.trace[i - 1].bracket[0].hi);
  }
}

TEST_CASE("tac_minimize_1d reports evaluation counts exactly") {
  std::atomic<long long> calls{0};
  const auto objective = [&calls](double k) {
    ++calls;
    return std::abs(k + 2.5);
  };
  const TacResult res = tac_minimize_1d(objective, config_1d({-10.0, -1e-3}, 1e-6));
  CHECK(res.evaluations == calls.load());
  long long bound = 0;
  for (const TacIteration& it : res.trace) {
    bound += static_cast<long long>(it.mesh[0]) + 1;
  }
  CHECK(res.evaluations <= bound);
  CHECK(res.evaluations == bound);  // one axis: every mesh point is admissible
}

TEST_CASE("tac_minimize_1d is deterministic") {
  // A wiggly well exercises densification, plateau and refinement branches.
  const auto objective = [](double k) {
    const double tooth = std::abs(2.0 * (k / 2.0 - std::floor(k / 2.0)) - 1.0);
    return (k + 5.0) * (k + 5.0) + 0.2 * tooth;
  };
  const TacConfig cfg = config_1d({-10.0, -0.05}, 1e-7, 0.0);
  const TacResult a = tac_minimize_1d(objective, cfg);
  const TacResult b = tac_minimize_1d(objective, cfg);
  CHECK(a.minimizer[0] == b.minimizer[0]);
  CHECK(a.evaluations == b.evaluations);
  CHECK(traces_equal(a, b));
}

TEST_CASE("tac_minimize_1d exhausts the budget on a fast sawtooth") {
  // Sign changes at every scale force endless densification.
  const auto objective = [](double k) { return std::sin(200.0 * k); };
  TacConfig cfg = config_1d({-10.0, -0.01}, 1e-9);
  cfg.densify_cap = 640;
  try {
    tac_minimize_1d(objective, cfg);
    FAIL("expected BudgetExceeded");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::BudgetExceeded);
  }
}

TEST_CASE("tac_minimize_1d accepts a constant plateau without error") {
  std::atomic<long long> calls{0};
  const auto objective = [&calls](double) {
    ++calls;
    return 7.25;
  };
  const TacResult res = tac_minimize_1d(objective, config_1d({-10.0, -1.0}, 1e-6));
  CHECK(res.objective_at_min == 7.25);
  CHECK(res.minimizer[0] >= -10.0);
  CHECK(res.minimizer[0] <= -1.0);
  CHECK(res.evaluations == calls.load());
}

TEST_CASE("tac_minimize_1d propagates evaluator failures as ObjectiveError") {
  const auto objective = [](double k) -> double {
    if (k < -5.0) throw std::runtime_error("probe failure");
    return k * k;
  };
  try {
    tac_minimize_1d(objective, config_1d({-10.0, -1.0}, 1e-6));
    FAIL("expected ObjectiveError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ObjectiveError);
  }
}

TEST_CASE("tac_minimize_nd with one axis reproduces the 1-d run") {
  const auto scalar = [](double k) { return (k + 3.0) * (k + 3.0); };
  const auto vector_obj = [&](std::span<const double> p) { return scalar(p[0]); };
  const TacConfig cfg = config_1d({-10.0, -1e-9}, 1e-6);
  const TacResult a = tac_minimize_1d(scalar, cfg);
  const TacResult b = tac_minimize_nd(vector_obj, cfg);
  CHECK(a.minimizer[0] == b.minimizer[0]);
  CHECK(a.objective_at_min == b.objective_at_min);
  CHECK(a.evaluations == b.evaluations);
  CHECK(traces_equal(a, b));
}

TEST_CASE("tac_minimize_nd locates a separable quadratic minimum") {
  const auto objective = [](std::span<const double> p) {
    return (p[0] + 2.0) * (p[0] + 2.0) + (p[1] + 5.0) * (p[1] + 5.0);
  };
  TacConfig cfg;
  cfg.axes = {{-10.0, -1e-3}, {-10.0, -1e-3}};
  cfg.alpha = 1e-6;
  const TacResult res = tac_minimize_nd(objective, cfg);
  CHECK(std::abs(res.minimizer[0] + 2.0) <= 1e-6);
  CHECK(std::abs(res.minimizer[1] + 5.0) <= 1e-6);
}

TEST_CASE("tac_minimize_nd respects ascending ordering constraints") {
  // Unconstrained minimum (-2, -5) violates p0 <= p1; the admissible optimum
  // sits on the diagonal at t minimizing (t+2)^2 + (t+5)^2, i.e. t = -3.5.
  const auto objective = [](std::span<const double> p) {
    return (p[0] + 2.0) * (p[0] + 2.0) + (p[1] + 5.0) * (p[1] + 5.0);
  };
  TacConfig cfg;
  cfg.axes = {{-10.0, -1e-3}, {-10.0, -1e-3}};
  cfg.alpha = 1e-6;
  cfg.ordered_groups = {{0, 1}};
  cfg.max_iterations = 400;
  const TacResult res = tac_minimize_nd(objective, cfg);
  CHECK(res.minimizer[0] <= res.minimizer[1]);
  CHECK(std::abs(res.minimizer[0] + 3.5) <= 1e-3);
  CHECK(std::abs(res.minimizer[1] + 3.5) <= 1e-3);
}

TEST_CASE("tac_minimize_nd recovers biexponential rates from e2") {
  const std::vector<double> times = testsupport::arange(0.0, 10.0, 0.005);
  const Observations obs = testsupport::exp2_series(
      1.6849216e-10, -4.7832922, 1.3747312e-10, -0.3521602, 6.5258959e-10, times);
  double scale = 0;
  for (double v : obs.values) scale = std::max(scale, std::abs(v));
  const auto objective = [&](std::span<const double> p) {
    const std::vector<double> rates{p[0], p[1]};
    try {
      return e2(rates, {}, obs) / scale;
    } catch (const Error&) {
      return 1e308;
    }
  };
  TacConfig cfg;
  cfg.axes = {{-20.0, -1e-6}, {-20.0, -1e-6}};
  cfg.alpha = 1e-6;
  cfg.ordered_groups = {{0, 1}};
  const TacResult res = tac_minimize_nd(objective, cfg);
  CHECK(std::abs(res.minimizer[0] + 4.7832922) <= 1e-4 * 4.7832922);
  CHECK(std::abs(res.minimizer[1] + 0.3521602) <= 1e-4 * 0.3521602);
}
