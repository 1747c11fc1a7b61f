#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "chflow/error.hpp"
#include "chflow/experiments.hpp"
#include "chflow/inequality_lab.hpp"
#include "chflow/manifold.hpp"
#include "doctest.h"

using namespace chflow;

namespace {

Scenario stationary_torus() {
  Scenario s;
  s.id = "still";
  s.L = 16;
  s.n = 256;
  s.solver.t_end = 50;
  return s;
}

// sum of cosines with random phases on modes [lo, hi] of the grid
Field band_limited(const Grid& g, std::mt19937_64& rng, int lo, int hi) {
  std::normal_distribution<double> N;
  std::uniform_real_distribution<double> ph(0.0, 2.0 * std::numbers::pi);
  std::vector<double> a, phase;
  for (int j = lo; j <= hi; ++j) {
    a.push_back(N(rng));
    phase.push_back(ph(rng));
  }
  return Field::sample(g, [&](double x) {
    double v = 0.0;
    for (int j = lo; j <= hi; ++j) v += a[j - lo] * std::cos(g.wavenumber(j) * x + phase[j - lo]);
    return v;
  });
}

Field roll(const Field& f, std::size_t k) {
  Field out = f;
  std::rotate(out.values.begin(), out.values.begin() + static_cast<std::ptrdiff_t>(k), out.values.end());
  return out;
}

}  // namespace

TEST_CASE("stationary bump: every check is vacuous") {
  const auto p = Potential::quartic();
  const Scenario s = stationary_torus();
  const auto r = run(s, p);
  const auto nash = check_nash(r.series, s);
  CHECK(nash.pass);
  CHECK(nash.ratio.empty());
  CHECK(nash.excluded == r.series.size());
  const auto diss = check_dissipation_bounds(r.series, s);
  CHECK(diss.by_energy.pass);
  CHECK(diss.by_energy.ratio.empty());
  const auto ode = check_ode_decay(r.series, s);
  CHECK(ode.pass);
  CHECK(ode.ratio.empty());
}

TEST_CASE("EED ratio for small orthogonal perturbations of the bump") {
  const auto p = Potential::quartic();
  const Grid g(32.0, 1024);
  const auto w = solve_bump(g, p, 0.0);
  const Field wx(g, spectral(g).derivative(w.samples.values, 1));
  double wxx = 0.0;
  for (double v : wx.values) wxx += v * v;

  const auto exact = eed_sample(w.samples, w, p);
  CHECK(std::abs(exact.gap) <= 1e-12);
  CHECK(exact.h1 <= 1e-20);

  std::mt19937_64 rng(17);
  const double delta = 1e-3;
  for (int trial = 0; trial < 20; ++trial) {
    Field phi = band_limited(g, rng, 1, 12);
    double dot = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) dot += phi[i] * wx[i];
    phi -= (dot / wxx) * wx;
    phi -= Field::constant(g, phi.mean());
    phi *= 1.0 / phi.linf();
    const auto e = eed_sample(w.samples + delta * phi, w, p);
    const double ratio = e.h1 / e.gap;
    CHECK(ratio >= 0.2);
    CHECK(ratio <= 5.0);
  }
}

TEST_CASE("Hardy ratio") {
  const auto p = Potential::quartic();
  const auto v = kink(p, 0.0);
  const Grid g(32.0, 1024);
  const HalfInterval I{};

  CHECK(std::isnan(check_hardy(Field(g), v, I)));

  const Field gauss = Field::sample(g, [](double x) { return std::exp(-x * x); });
  const double rg = check_hardy(gauss, v, I);
  CHECK(rg > 0.0);
  CHECK(rg <= 10.0);

  const Grid fine(32.0, 2048);
  std::mt19937_64 rng(23), rng_fine(23);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Field f = band_limited(g, rng, 1, 24);
    const Field ff = band_limited(fine, rng_fine, 1, 24);
    const double r = check_hardy(f, v, I);
    const double rf = check_hardy(ff, v, I);
    REQUIRE(std::isfinite(r));
    worst = std::max(worst, r);
    CHECK(std::abs(r - rf) <= 1e-2 * r);
  }
  CHECK(worst <= 10.0);
  MESSAGE("worst Hardy ratio over 100 samples: " << worst);
}

TEST_CASE("spectrum agrees with a dense symmetric eigensolver") {
  const auto p = Potential::quartic();
  const Grid g(16.0, 256);
  const auto w = solve_bump(g, p, 0.0);
  const auto rep = check_linearization_spectrum(w, p);
  Eigen::MatrixXd A = linearization_matrix(w, p);
  A = 0.5 * (A + A.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  REQUIRE(rep.eigenvalues.size() == 5);
  for (int k = 0; k < 5; ++k) CHECK(std::abs(rep.eigenvalues[k] - es.eigenvalues()[k]) <= 1e-8);
  CHECK(std::abs(rep.lambda1) <= 1e-6);
  CHECK(rep.overlap >= 0.999);
  CHECK(rep.lambda3 >= 0.1);
}

TEST_CASE("Nash ratio is invariant under translation") {
  const auto p = Potential::quartic();
  Scenario s = stationary_torus();
  s.disturbance = {-0.5, 1.5, 14.0};
  s.solver.t_end = 200;
  const auto r = run(s, p, true);
  const auto prof = build_profiles(s, p);
  DiagnosticsSeries moved;
  for (std::size_t i = 0; i < r.trajectory.size(); ++i)
    moved.push_back(diagnose(s, prof, p, r.trajectory.times[i], roll(r.trajectory.snapshots[i], 37)));
  const auto a = check_nash(r.series, s);
  const auto b = check_nash(moved, s);
  REQUIRE(a.ratio.size() > 20);
  CHECK(std::abs(a.worst - b.worst) <= 1e-6 * a.worst);
}

TEST_CASE("refinement stability on a short torus run") {
  const auto p = Potential::quartic();
  Scenario s = stationary_torus();
  s.L = 16;
  s.n = 512;
  s.disturbance = {-0.5, 1.5, 14.0};
  s.solver.t_end = 1000;
  s.solver.schedule.uniform_interval = 10;

  Scenario dense = s;
  dense.solver.schedule.per_decade *= 2;
  dense.solver.schedule.uniform_interval /= 2;
  Scenario fine = s;
  fine.n *= 2;

  const auto rs = run_sweep({s, dense, fine}, p);
  const auto base = check_dissipation_bounds(rs[0].series, s);
  const auto denser = check_dissipation_bounds(rs[1].series, dense);
  REQUIRE(std::isfinite(base.integral.worst));
  CHECK(std::abs(denser.integral.worst - base.integral.worst) <= 0.1 * base.integral.worst);

  const auto n1 = check_nash(rs[0].series, s);
  const auto n2 = check_nash(rs[2].series, fine);
  CHECK(std::abs(n2.worst - n1.worst) <= 0.05 * n1.worst);
}
