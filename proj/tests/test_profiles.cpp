#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "chflow/error.hpp"
#include "chflow/functionals.hpp"
#include "chflow/profiles.hpp"
#include "doctest.h"

using namespace chflow;

namespace {

const double kEStar = 2.0 * std::numbers::sqrt2 / 3.0;

// Quartic well routed through the generic (ODE) code path.
Potential quartic_as_custom() {
  return Potential::custom([](double u) { return 0.25 * (1 - u * u) * (1 - u * u); },
                           [](double u) { return u * u * u - u; }, [](double u) { return 3 * u * u - 1; },
                           [](double u) { return 6 * u; });
}

// G = (1-u^2)^2 (1+u^2) / 4
Potential sextic() {
  return Potential::custom([](double u) { return 0.25 * (1 - u * u) * (1 - u * u) * (1 + u * u); },
                           [](double u) { return 1.5 * u * u * u * u * u - u * u * u - 0.5 * u; },
                           [](double u) { return 7.5 * u * u * u * u - 3 * u * u - 0.5; },
                           [](double u) { return 30 * u * u * u - 6 * u; });
}

}  // namespace

TEST_CASE("quartic kink closed form") {
  const auto p = Potential::quartic();
  CHECK(kink(p, 0.0).value(0.0) == 0.0);
  CHECK(kink(p, 0.0).value(1.0) == std::tanh(1.0 / std::numbers::sqrt2));
  CHECK(std::abs(kink(p, 0.0).value(1.0) - 0.6088594) <= 1e-6);
  CHECK(kink(p, 2.0).value(2.0) == 0.0);
  const auto v = kink(p, 0.0);
  for (double x = -30; x <= 30; x += 0.37) {
    CHECK(std::abs(v.residual(x)) <= 1e-10);
    CHECK(v.derivative(x, 1) > 0.0);
  }
}

TEST_CASE("ODE kink agrees with tanh") {
  const auto v = kink(quartic_as_custom(), 0.5);
  const auto ref = kink(Potential::quartic(), 0.5);
  CHECK(v.value(0.5) == 0.0);
  double worst[4] = {0, 0, 0, 0};
  for (double x = -40; x <= 40; x += 0.0731) {
    for (int k = 0; k < 4; ++k) worst[k] = std::max(worst[k], std::abs(v.derivative(x, k) - ref.derivative(x, k)));
    CHECK(std::abs(v.residual(x)) <= 1e-10);
  }
  CHECK(worst[0] <= 1e-10);
  CHECK(worst[1] <= 1e-9);
  CHECK(worst[2] <= 1e-9);
  CHECK(worst[3] <= 1e-9);
}

TEST_CASE("kink energy of the quartic well") {
  const auto p = Potential::quartic();
  const double e = kink_energy(p);
  // x-space oracle: integral of 2 G(tanh(x / sqrt2)) over the line
  boost::math::quadrature::sinh_sinh<double> ss;
  const double oracle = ss.integrate([&](double x) { return 2.0 * p.eval(std::tanh(x / std::numbers::sqrt2)); });
  CHECK(std::abs(oracle - kEStar) <= 1e-12);
  CHECK(std::abs(e - kEStar) <= 1e-12);
  CHECK(e == doctest::Approx(0.9428090).epsilon(1e-7));
}

TEST_CASE("kink tail energy") {
  const auto p = Potential::quartic();
  CHECK(kink_tail_energy(p, 40.0) <= 1e-10);
  CHECK(kink_tail_energy(p, 0.0) == doctest::Approx(kEStar).epsilon(1e-12));
  boost::math::quadrature::exp_sinh<double> es;
  const double oracle =
      2.0 * es.integrate([&](double x) { return 2.0 * p.eval(std::tanh(x / std::numbers::sqrt2)); }, 3.0,
                         std::numeric_limits<double>::infinity());
  CHECK(kink_tail_energy(p, 3.0) == doctest::Approx(oracle).epsilon(1e-10));
}

TEST_CASE("sextic well: Modica-Mortola energy matches the ODE profile") {
  const auto p = sextic();
  CHECK(validate(p, 400).all_passed());
  const auto v = kink(p, 0.0);
  boost::math::quadrature::sinh_sinh<double> ss;
  const double oracle = ss.integrate([&](double x) {
    const double vx = v.derivative(x, 1);
    return 0.5 * vx * vx + p.eval(v.value(x));
  });
  CHECK(kink_energy(p) == doctest::Approx(oracle).epsilon(1e-8));
  for (double x = -20; x <= 20; x += 0.41) CHECK(std::abs(v.residual(x)) <= 1e-10);
}

TEST_CASE("bump profile at L = 32") {
  const auto p = Potential::quartic();
  const Grid g(32.0, 512);
  const auto w = solve_bump(g, p, 0.0);
  CHECK(w.residual <= 1e-9);
  CHECK(std::abs(w.mean) <= 1e-12);
  CHECK(std::abs(w.energy - 2 * kEStar) <= 1e-6);
  CHECK(std::abs(w.zeros.first + w.zeros.second) <= 1e-8);
  CHECK(dissipation(w.samples, p) <= 1e-18);
  CHECK(w.c0 > 0.0);
  CHECK(w.c0 <= 64.0);
  // the maximum sits at x = 0
  const auto& sp = spectral(g);
  const auto wh = spectral(g).forward(w.samples.values);
  CHECK(std::abs(sp.interpolate(wh, 0.0, 1)) <= 1e-10);
  CHECK(w.samples[256] == doctest::Approx(w.samples.linf()));
}

TEST_CASE("bump profile with nonzero mean") {
  const auto p = Potential::quartic();
  const Grid g(32.0, 512);
  const auto w = solve_bump(g, p, -0.5);
  CHECK(std::abs(w.mean + 0.5) <= 1e-12);
  CHECK(w.residual <= 1e-9);
  CHECK(std::abs((w.zeros.second - w.zeros.first) - 16.0) < 0.5);
}

TEST_CASE("bump profile interpolated onto a finer grid") {
  const auto p = Potential::quartic();
  const auto w = solve_bump(Grid(16.0, 1024), p, 0.25);
  CHECK(w.residual <= 1e-9);
  CHECK(std::abs(w.mean - 0.25) <= 1e-12);
}

TEST_CASE("bump argument checks") {
  const auto p = Potential::quartic();
  CHECK_THROWS_AS(solve_bump(Grid(32.0, 512), p, 0.9), Error);
  CHECK_THROWS_AS(solve_bump(Grid(8.0, 256), p, 0.0), Error);
  CHECK_THROWS_AS(solve_bump(Grid(32.0, 256), p, 0.0), Error);
}

TEST_CASE("glued kinks on the torus") {
  const auto p = Potential::quartic();
  const double L = 32.0;
  const auto w = glue_kinks(p, 0.0, -L / 2, L / 2, L, true);
  double dev = 0.0;
  for (double x = -1; x <= 1; x += 0.01) dev = std::max(dev, std::abs(w.value(x) - 1.0));
  CHECK(dev <= 1e-8);
  CHECK(std::abs(w.value(-L / 2)) <= 1e-15);
  CHECK(std::abs(w.value(L / 2)) <= 1e-15);
  CHECK(w.max_junction_jump() <= 1e-12);
  CHECK(w.h1_deviation_near() <= std::exp(-L / 64));
  CHECK(w.c0() > 0.0);

  const Grid g(L, 1024);
  const double e = energy(w.sample(g), p);
  CHECK(std::abs(e - 2 * kEStar) <= std::exp(-L / 64));
  CHECK(std::abs(e - 2 * kEStar) <= 1e-6);
}

TEST_CASE("glued kinks on the line") {
  const auto p = Potential::quartic();
  const auto w = glue_kinks(p, 3.0, 3.0 - 16.0, 3.0 + 20.0, 32.0, false);
  CHECK(w.value(-100.0) == doctest::Approx(-1.0));
  CHECK(w.value(100.0) == doctest::Approx(-1.0));
  CHECK(std::abs(w.value(3.0 - 16.0)) <= 1e-15);
  CHECK(w.max_junction_jump() <= 1e-12);
  CHECK_THROWS_AS(glue_kinks(p, 0.0, -10.0, 20.0, 32.0, false), Error);
}

TEST_CASE("glued kink separation and bound errors") {
  const auto p = Potential::quartic();
  try {
    glue_kinks(p, 0.0, -1.5, 16.0, 32.0, true);
    FAIL("expected SeparationViolated");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SeparationViolated);
  }
  try {
    glue_kinks(p, 0.0, -1.2, 1.2, 16.0, true);
    FAIL("expected InterpolantBoundViolated");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InterpolantBoundViolated);
  }
}

TEST_CASE("property: glued profiles are translation equivariant") {
  const auto p = Potential::quartic();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> shift(-40.0, 40.0), off(5.0, 26.0);
  const double L = 32.0;
  for (int trial = 0; trial < 20; ++trial) {
    const double s = shift(rng), a = -off(rng), b = off(rng);
    const auto w0 = glue_kinks(p, 0.0, a, b, L, true);
    const auto w1 = glue_kinks(p, s, a + s, b + s, L, true);
    double worst = 0.0;
    for (double x = -L; x < L; x += 0.173) worst = std::max(worst, std::abs(w1.value(x + s) - w0.value(x)));
    CHECK(worst <= 1e-12);
    CHECK(w0.max_junction_jump() <= 1e-12);
  }
}

TEST_CASE("sharp interface") {
  const SharpInterface chi{16.0, 3.0};
  CHECK(chi.value(3.0) == 1.0);
  CHECK(chi.value(19.5) == -1.0);
  const Grid g(32.0, 4096);
  const auto f = chi.sample(g);
  double s = 0.0;
  for (double v : f.values) s += v + 1.0;
  CHECK(std::abs(s * g.dx() - 4 * 16.0) <= 2 * g.dx());
}
