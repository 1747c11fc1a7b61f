#include <algorithm>
#include <cmath>
#include <random>

#include "chflow/error.hpp"
#include "chflow/potential.hpp"
#include "doctest.h"

using namespace chflow;

TEST_CASE("quartic values") {
  const auto p = Potential::quartic();
  CHECK(p.eval(1.0) == 0.0);
  CHECK(p.eval(-1.0) == 0.0);
  CHECK(p.eval(0.0) == 0.25);
  CHECK(p.d2(1.0) == 2.0);
  CHECK(p.gpp_plus() == p.d2(1.0));
  CHECK(p.gpp_minus() == p.d2(-1.0));
}

TEST_CASE("quartic derivatives match central differences") {
  const auto p = Potential::quartic();
  const double h = 1e-5;
  // 1e-10 plus the truncation term h^2 f''' / 6 and the cancellation error eps |f| / h
  auto tol = [h](double f, double third) {
    return 1e-10 + h * h * std::abs(third) / 6.0 + 4e-16 * std::abs(f) / h;
  };
  for (int i = 0; i <= 400; ++i) {
    const double u = -2.0 + 4.0 * i / 400;
    CHECK(std::abs((p.eval(u + h) - p.eval(u - h)) / (2 * h) - p.d1(u)) < tol(p.eval(u), p.d3(u)));
    CHECK(std::abs((p.d1(u + h) - p.d1(u - h)) / (2 * h) - p.d2(u)) < tol(p.d1(u), 6.0));
    CHECK(std::abs((p.d2(u + h) - p.d2(u - h)) / (2 * h) - p.d3(u)) < tol(p.d2(u), 0.0));
  }
}

TEST_CASE("validate accepts the quartic well") {
  const auto rep = validate(Potential::quartic(), 1000);
  CHECK(rep.all_passed());
  CHECK(rep.checks.size() == 5);
}

TEST_CASE("validate rejects a negated well") {
  const auto p = Potential::custom([](double u) { return -(1 - u * u) * (1 - u * u); },
                                   [](double u) { return 4 * u * (1 - u * u); },
                                   [](double u) { return 4 - 12 * u * u; }, [](double u) { return -24 * u; });
  CHECK_THROWS_AS(validate(p, 100), Error);
  const auto rep = check_assumptions(p, 100);
  CHECK_FALSE(rep.checks[1].passed);
  try {
    validate(p, 100);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PotentialInvalid);
  }
}

TEST_CASE("validate rejects an odd perturbation") {
  const auto p = Potential::custom([](double u) { return 0.25 * (1 - u * u) * (1 - u * u) + 0.1 * u; },
                                   [](double u) { return u * u * u - u + 0.1; },
                                   [](double u) { return 3 * u * u - 1; }, [](double u) { return 6 * u; });
  const auto rep = check_assumptions(p, 100);
  CHECK_FALSE(rep.all_passed());
  CHECK_FALSE(rep.checks[2].passed);
  CHECK_THROWS_AS(validate(p, 100), Error);
}

TEST_CASE("validate needs enough samples") { CHECK_THROWS_AS(validate(Potential::quartic(), 8), Error); }

TEST_CASE("property: random even sextic wells validate") {
  // G = (1-u^2)^2 (a + b u^2) / 4 with a, b > 0 satisfies every assumption
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> da(0.5, 3.0), db(0.1, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    // b <= 2a keeps G' <= 0 on [0, 1]
    const double a = da(rng), b = db(rng);
    const auto p = Potential::custom(
        [=](double u) { return 0.25 * (1 - u * u) * (1 - u * u) * (a + b * u * u); },
        [=](double u) { return u * (u * u - 1) * (a + b * u * u) + 0.5 * b * u * (1 - u * u) * (1 - u * u); },
        [](double) { return 0.0; }, [](double) { return 0.0; });
    // only the value and first derivative matter for the first four checks
    const auto rep = check_assumptions(p, 200);
    CHECK(rep.checks[0].passed);
    CHECK(rep.checks[1].passed);
    CHECK(rep.checks[2].passed);
    CHECK(rep.checks[3].passed);
  }
}
