#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "tacfit/observations.hpp"

using namespace tacfit;

TEST_CASE("validate_observations sorts by time and pairs values") {
  const Observations obs = validate_observations({{0, 1}, {2, 0.5}, {1, 0.7}});
  CHECK(obs.times == std::vector<double>{0, 1, 2});
  CHECK(obs.values == std::vector<double>{1, 0.7, 0.5});
}

TEST_CASE("validate_observations rejects duplicate timestamps") {
  try {
    validate_observations({{0, 1}, {0, 2}, {1, 3}});
    FAIL("expected DuplicateTime");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DuplicateTime);
  }
}

TEST_CASE("validate_observations rejects short series") {
  try {
    validate_observations({{1, 5}, {2, 3}});
    FAIL("expected TooFew");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::TooFew);
  }
}

TEST_CASE("validate_observations rejects non-finite entries") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<std::pair<double, double>> bad_entries{
      {nan, 1.0}, {1.0, nan}, {inf, 0.0}, {0.0, -inf}};
  for (const auto& bad : bad_entries) {
    try {
      validate_observations({{0, 1}, bad, {2, 3}, {3, 4}});
      FAIL("expected NonFinite");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::NonFinite);
    }
  }
}

TEST_CASE("validate_observations is idempotent on random input") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-10.0, 10.0);
  for (int round = 0; round < 50; ++round) {
    std::vector<std::pair<double, double>> raw;
    for (int i = 0; i < 20; ++i) raw.emplace_back(dist(rng), dist(rng));
    const Observations once = validate_observations(raw);
    std::vector<std::pair<double, double>> again;
    for (std::size_t i = 0; i < once.size(); ++i) {
      again.emplace_back(once.times[i], once.values[i]);
    }
    const Observations twice = validate_observations(again);
    CHECK(twice.times == once.times);
    CHECK(twice.values == once.values);
    for (std::size_t i = 1; i < once.size(); ++i) {
      CHECK(once.times[i] > once.times[i - 1]);
    }
  }
}

TEST_CASE("ModelSpec::validate enforces field combinations") {
  ModelSpec spec;
  CHECK_NOTHROW(spec.validate());

  SUBCASE("linf is exp1-only") {
    spec.kind = ModelKind::Exp2;
    spec.norm = NormKind::Linf;
    CHECK_THROWS_AS(spec.validate(), Error);
  }
  SUBCASE("k interval must not straddle zero") {
    spec.k_interval = {-1.0, 1.0};
    CHECK_THROWS_AS(spec.validate(), Error);
  }
  SUBCASE("exp2osc needs a positive mu interval") {
    spec.kind = ModelKind::Exp2Osc;
    CHECK_THROWS_AS(spec.validate(), Error);
    spec.mu_interval = Interval{1e-6, 10.0};
    CHECK_NOTHROW(spec.validate());
  }
  SUBCASE("mesh and alpha bounds") {
    spec.mesh = 1;
    CHECK_THROWS_AS(spec.validate(), Error);
    spec.mesh = 10;
    spec.alpha = 0.0;
    CHECK_THROWS_AS(spec.validate(), Error);
  }
  SUBCASE("growth-rate intervals are accepted") {
    spec.k_interval = {1e-6, 5.0};
    CHECK_NOTHROW(spec.validate());
  }
}
