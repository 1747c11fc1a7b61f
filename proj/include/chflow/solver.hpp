#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "chflow/grid.hpp"
#include "chflow/potential.hpp"

namespace chflow {

/// Snapshot times: log-spaced from log_start with per_decade samples, plus an
/// optional uniform comb and explicit extra times. t_end is always included.
struct SnapshotSchedule {
  double log_start = 1e-2;
  int per_decade = 16;
  double uniform_interval = 0.0;  ///< 0 disables the uniform comb
  std::vector<double> extra;

  std::vector<double> times(double t_end) const;
  bool operator==(const SnapshotSchedule&) const = default;
};

struct SolverConfig {
  double dt = 1e-3;             ///< fixed step, or the initial step when adapt is on
  double stabilization = 4.0;   ///< S in the IMEX splitting
  double t_end = 1.0;
  bool adapt = true;
  bool dealias = true;
  double tolerance = 1e-7;      ///< step-doubling sup-norm tolerance
  double dt_min = 1e-9;
  double dt_max = 0.5;
  double energy_slack = 1e-12;  ///< accepted steps satisfy E_new <= E_old + slack
  SnapshotSchedule schedule;

  /// Throws InvalidArgument on inconsistent settings.
  void validate(const Potential& p) const;
  bool operator==(const SolverConfig&) const = default;
};

/// One stabilized IMEX step of size cfg.dt. Throws NonFinite.
Field step(const Field& u, const SolverConfig& cfg, const Potential& p);

struct StepRecord {
  double t = 0.0;   ///< time after the step
  double dt = 0.0;
  double E = 0.0;
  double D = 0.0;
};

struct Trajectory {
  Grid grid;
  std::vector<double> times;
  std::vector<Field> snapshots;
  std::vector<StepRecord> steps;  ///< every accepted step, preceded by t = 0
  double initial_mean = 0.0;
  double max_mean_drift = 0.0;
  double max_energy_increase = 0.0;  ///< largest E_new - E_old over accepted steps
  std::size_t accepted = 0;
  std::size_t rejected = 0;

  explicit Trajectory(const Grid& g) : grid(g) {}
  std::size_t size() const noexcept { return snapshots.size(); }
  /// Index of the first snapshot with time >= t (or the last one).
  std::size_t index_at(double t) const;
  /// Trapezoid rule for the time integral of D over the step log on [t0, t1].
  double integrated_dissipation(double t0, double t1) const;
  /// Trapezoid rule for the time integral of sqrt(D) over the step log on [t0, t1].
  double integrated_sqrt_dissipation(double t0, double t1) const;
};

/// Called at t = 0 and at every snapshot time, on the integrating thread.
using SnapshotHook = std::function<void(double t, const Field& u)>;

/// Integrates to cfg.t_end. With adapt on, uses step doubling; errors are
/// StepFloorReached and EnergyIncreaseAtFloor.
Trajectory evolve(const Field& u0, const SolverConfig& cfg, const Potential& p, const SnapshotHook& hook = {},
                  bool keep_snapshots = true);

struct BackwardConfig {
  double g2 = 2.0;                 ///< G''(+-1)
  double horizon = 1.0;            ///< T
  std::vector<double> taus;        ///< tau = T - t at which to record
};

struct BackwardTrajectory {
  std::vector<double> taus;
  std::vector<double> zeta_xx_sup;
  /// max over recorded taus of |zeta - psi| at x = -L (far from the data's
  /// structure); measures wrap-around contamination for localized data.
  double wrap_deviation = 0.0;
  std::vector<Field> zeta;
};

/// Exact Fourier solution of zeta_tau = -zeta_xxxx + g2 zeta_xx with zeta(0) = psi.
BackwardTrajectory solve_backward(const BackwardConfig& cfg, const Field& psi, bool keep_fields = false);

/// Square wave: +1 on |x| < L/2, -1 outside, 0 at the jumps.
Field square_wave(const Grid& g);

}  // namespace chflow
