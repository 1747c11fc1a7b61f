#include <cmath>
#include <numbers>
#include <random>

#include "chflow/error.hpp"
#include "chflow/functionals.hpp"
#include "chflow/profiles.hpp"
#include "chflow/solver.hpp"
#include "doctest.h"

using namespace chflow;

namespace {

Field random_smooth(const Grid& g, std::mt19937_64& rng, int modes = 6, double amp = 0.5) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> a(modes), b(modes);
  for (int k = 0; k < modes; ++k) {
    a[k] = amp * nd(rng) / (k + 1);
    b[k] = amp * nd(rng) / (k + 1);
  }
  const double c = 0.3 * nd(rng);
  return Field::sample(g, [&](double x) {
    double s = c;
    for (int k = 0; k < modes; ++k) {
      const double kk = std::numbers::pi * (k + 1) / g.half_length();
      s += a[k] * std::cos(kk * x) + b[k] * std::sin(kk * x);
    }
    return s;
  });
}

// -1 plus an even smooth bump of height h and half-width r centered at x0
Field minus_one_plus_bump(const Grid& g, double x0, double h, double r) {
  return Field::sample(g, [&](double x) {
    const double s = g.wrap(x - x0) / r;
    return -1.0 + (std::abs(s) < 1.0 ? h * std::exp(1.0 - 1.0 / (1.0 - s * s)) : 0.0);
  });
}

}  // namespace

TEST_CASE("constant state is stationary") {
  const Grid g(16.0, 256);
  SolverConfig cfg;
  cfg.dt = 0.1;
  const auto u = step(Field::constant(g, -1.0), cfg, Potential::quartic());
  for (double v : u.values) CHECK(v == -1.0);
}

TEST_CASE("bump profile is a fixed point of one step") {
  const auto p = Potential::quartic();
  const Grid g(32.0, 512);
  const auto w = solve_bump(g, p, 0.0);
  for (double dt : {1e-3, 1e-2, 0.1}) {
    SolverConfig cfg;
    cfg.dt = dt;
    const auto u = step(w.samples, cfg, p);
    CHECK((u - w.samples).linf() <= 1e-9 * dt);
  }
}

TEST_CASE("property: one step conserves the mean") {
  const auto p = Potential::quartic();
  const Grid g(16.0, 256);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const auto u = random_smooth(g, rng);
    SolverConfig cfg;
    cfg.dt = 0.05;
    const auto v = step(u, cfg, p);
    CHECK(std::abs(v.mean() - u.mean()) <= 1e-14);
  }
}

TEST_CASE("step rejects non-finite data") {
  const Grid g(16.0, 256);
  auto u = Field::constant(g, 0.0);
  u[3] = std::nan("");
  CHECK_THROWS_AS(step(u, SolverConfig{}, Potential::quartic()), Error);
}

TEST_CASE("stationary bump keeps its energy") {
  const auto p = Potential::quartic();
  const Grid g(16.0, 256);
  const auto w = solve_bump(g, p, 0.0);
  SolverConfig cfg;
  cfg.t_end = 10.0;
  const auto traj = evolve(w.samples, cfg, p);
  for (const auto& s : traj.steps) CHECK(std::abs(s.E - w.energy) <= 1e-9);
}

TEST_CASE("relaxation from a disturbed constant") {
  const auto p = Potential::quartic();
  const Grid g(16.0, 256);
  const auto u0 = minus_one_plus_bump(g, 0.0, 1.6, 5.0);
  SolverConfig cfg;
  cfg.t_end = 50.0;
  cfg.schedule.uniform_interval = 1.0;
  const auto traj = evolve(u0, cfg, p);
  for (std::size_t i = 1; i < traj.steps.size(); ++i) {
    CHECK(traj.steps[i].E <= traj.steps[i - 1].E + 1e-12);
  }
  for (std::size_t i = 1; i < traj.size(); ++i) {
    CHECK(energy(traj.snapshots[i], p) < energy(traj.snapshots[i - 1], p));
  }
  CHECK(traj.max_mean_drift <= 1e-13);
  CHECK(traj.max_energy_increase <= 1e-12);

  // the energy cap is inherited from the initial data
  const double e0 = energy(u0, p);
  for (const auto& s : traj.steps) CHECK(s.E <= e0 + 1e-12);

  // gradient-flow metric bound between snapshot pairs
  for (std::size_t i = 0; i + 1 < traj.size(); i += 7) {
    for (std::size_t j = i + 1; j < traj.size(); j += 11) {
      const double lhs = hminus1_norm(traj.snapshots[j] - traj.snapshots[i]);
      const double rhs = traj.integrated_sqrt_dissipation(traj.times[i], traj.times[j]);
      CHECK(lhs <= 1.02 * rhs + 1e-12);
    }
  }
}

TEST_CASE("discrete energy balance under dt refinement") {
  const auto p = Potential::quartic();
  const Grid g(16.0, 256);
  const auto u0 = minus_one_plus_bump(g, 0.0, 1.6, 5.0);
  double worst[2] = {0, 0};
  for (int r = 0; r < 2; ++r) {
    SolverConfig cfg;
    cfg.t_end = 20.0;
    cfg.tolerance = r == 0 ? 1e-6 : 2.5e-7;
    cfg.schedule.uniform_interval = 1.0;
    const auto traj = evolve(u0, cfg, p);
    for (std::size_t i = 1; i < traj.size(); ++i) {
      const double t0 = traj.times[i - 1], t1 = traj.times[i];
      const double Ea = energy(traj.snapshots[i - 1], p), Eb = energy(traj.snapshots[i], p);
      if (std::abs(Eb - Ea) < 1e-10) continue;
      const double bal = std::abs(Eb - Ea + traj.integrated_dissipation(t0, t1)) / std::abs(Eb - Ea);
      worst[r] = std::max(worst[r], bal);
    }
  }
  CHECK(worst[1] <= 0.05);
  CHECK(worst[1] <= worst[0] + 1e-3);
}

TEST_CASE("resolution convergence of the energy") {
  const auto p = Potential::quartic();
  double e[2];
  for (int r = 0; r < 2; ++r) {
    const Grid g(16.0, r == 0 ? 256 : 512);
    SolverConfig cfg;
    cfg.t_end = 5.0;
    cfg.adapt = false;
    cfg.dt = 1e-3;
    const auto traj = evolve(minus_one_plus_bump(g, 0.0, 1.6, 5.0), cfg, p, {}, false);
    e[r] = traj.steps.back().E;
  }
  CHECK(std::abs(e[1] - e[0]) <= 1e-8);
}

TEST_CASE("snapshot schedule") {
  SnapshotSchedule s;
  s.log_start = 1.0;
  s.per_decade = 4;
  s.uniform_interval = 25.0;
  const auto t = s.times(100.0);
  CHECK(t.front() == 1.0);
  CHECK(t.back() == 100.0);
  CHECK(std::is_sorted(t.begin(), t.end()));
  CHECK(std::count(t.begin(), t.end(), 50.0) == 1);
  CHECK(t.size() == 8 + 3 + 1);
}

TEST_CASE("backward semigroup: constants are invariant") {
  const Grid g(16.0, 256);
  BackwardConfig cfg;
  cfg.horizon = 10.0;
  cfg.taus = {0.0, 0.1, 1.0, 10.0};
  const auto bt = solve_backward(cfg, Field::constant(g, 1.0), true);
  for (std::size_t i = 0; i < bt.taus.size(); ++i) {
    CHECK(bt.zeta_xx_sup[i] <= 1e-14);
    CHECK(std::abs(bt.zeta[i].values[17] - 1.0) <= 1e-14);
  }
}

TEST_CASE("backward semigroup: square-wave slopes") {
  const Grid g(1024.0, 1 << 18);
  BackwardConfig cfg;
  cfg.horizon = 1e3;
  for (int k = 0; k <= 16; ++k) cfg.taus.push_back(1e-4 * std::pow(10.0, k / 8.0));
  for (int k = 0; k <= 16; ++k) cfg.taus.push_back(10.0 * std::pow(10.0, k / 8.0));
  const auto bt = solve_backward(cfg, square_wave(g));
  auto slope = [&](std::size_t lo, std::size_t hi) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(hi - lo);
    for (std::size_t i = lo; i < hi; ++i) {
      const double x = std::log(bt.taus[i]), y = std::log(bt.zeta_xx_sup[i]);
      sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
  };
  CHECK(std::abs(slope(0, 17) + 0.5) <= 0.1);
  CHECK(std::abs(slope(17, 34) + 1.0) <= 0.1);
  CHECK(bt.wrap_deviation <= 1e-10);
}
