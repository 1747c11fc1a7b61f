#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chflow/functionals.hpp"
#include "chflow/grid.hpp"
#include "chflow/potential.hpp"
#include "chflow/profiles.hpp"
#include "chflow/solver.hpp"

namespace chflow {

enum class Problem { TorusBump, LineBump, SubTwoEStar };

const char* to_string(Problem p) noexcept;
/// Accepts "torus", "line", "sub2e"; throws InvalidArgument otherwise.
Problem parse_problem(const std::string& name);

/// Smoothed bump exp(1 - 1/(1 - s^2)) on |s| < 1 with peak 1, placed at
/// center + offset and scaled to carry the given signed mass.
struct Disturbance {
  double mass = 0.0;
  double half_width = 2.0;
  double offset = 0.0;
  bool operator==(const Disturbance&) const = default;
};

/// integral of exp(1 - 1/(1 - s^2)) over (-1, 1).
double disturbance_shape_integral();
double disturbance_shape(double s);

struct PhaseThresholds {
  double t0_gap = 0.05;   ///< T0 needs the glued gap below this
  double t0_linf = 0.2;   ///< and sup |u - w~| below this
  double t2_eps = 0.1;    ///< T2: gap <= t2_eps / L
  double fit_floor = 1e-11;
  bool operator==(const PhaseThresholds&) const = default;
};

struct Scenario {
  std::string id = "torus";
  Problem problem = Problem::TorusBump;
  double L = 64.0;             ///< torus half length, or the line mass parameter
  std::size_t n = 4096;
  double domain_factor = 8.0;  ///< line surrogate: periodic domain [-Lambda L / 2, Lambda L / 2)
  double mean = 0.0;           ///< TorusBump mean constraint
  double mass = 2.0;           ///< SubTwoEStar: integral of u + 1
  Disturbance disturbance;
  double W0_target = 0.0;
  double epsilon = 0.2 * 2.0 * 1.4142135623730951 / 3.0;
  double sentinel = 1e-8;
  double noise = 0.0;          ///< amplitude of a seeded band-limited perturbation
  std::uint64_t seed = 0;
  PhaseThresholds phases;
  SolverConfig solver;

  /// Half length of the simulation grid.
  double domain_half_length() const;
  Grid grid() const;
  bool operator==(const Scenario&) const = default;
};

/// Reference profiles for one scenario; the bump only on the torus, the glued
/// line profile only on the line.
struct ScenarioProfiles {
  std::optional<BumpProfile> bump;
  std::optional<GluedKinkProfile> glued;
  double glued_energy = kNaN;  ///< E of the sampled glued profile
  double e_star = 0.0;
};

ScenarioProfiles build_profiles(const Scenario& s, const Potential& p);

/// Family parameter used for glued-profile membership on the line surrogate.
double line_family_length(double L);

struct InitialData {
  Field u0;
  Field reference;          ///< w, w~ or -1
  double energy = 0.0;
  double W0_measured = 0.0; ///< integral |u0 - reference|
  double constraint_error = 0.0;
  double amplitude = 0.0;
  double corrector_amplitude = 0.0;
  double H0 = kNaN;         ///< H^-1 distance to the reference, when defined
};

/// u0 = profile + disturbance + corrector (+ seeded noise). The corrector is
/// |w_x| of the profile, which moves both interfaces symmetrically; its
/// amplitude fixes the mean/mass constraint. Throws EnergyBudgetExceeded,
/// ConstraintCorrectionFailed, InvalidArgument (support too close to an
/// interface or the domain end).
InitialData build_initial(const Scenario& s, const ScenarioProfiles& prof, const Potential& p);

struct RunResult {
  Scenario scenario;
  Trajectory trajectory;
  DiagnosticsSeries series;
  InitialData initial;
  double wall_seconds = 0.0;
};

/// Diagnostics for one snapshot; projections that fail leave NaN fields.
DiagnosticsRecord diagnose(const Scenario& s, const ScenarioProfiles& prof, const Potential& p, double t,
                           const Field& u);

RunResult run(const Scenario& s, const Potential& p, bool keep_snapshots = false);

/// Runs independent scenarios on a pool capped by CHFLOW_THREADS (default:
/// hardware concurrency). Results keep the input order; the first error is rethrown.
std::vector<RunResult> run_sweep(const std::vector<Scenario>& scenarios, const Potential& p,
                                 bool keep_snapshots = false);
unsigned sweep_threads(std::size_t jobs);

enum class FitModel { PowerLaw, Exponential };

struct FitResult {
  FitModel model = FitModel::PowerLaw;
  double exponent = kNaN;   ///< slope for PowerLaw, decay rate for Exponential
  double prefactor = kNaN;
  double r2 = kNaN;
  std::size_t points = 0;
  double t_lo = kNaN;
  double t_hi = kNaN;
};

/// Least squares in log space on t in [t_lo, t_hi]. PowerLaw fits
/// y = A t^p (exponent p); Exponential fits y = A exp(-lambda t) (exponent
/// lambda). Throws InsufficientData below 10 points or on y <= 0.
FitResult fit_rate(const std::vector<double>& t, const std::vector<double>& y, double t_lo, double t_hi,
                   FitModel model);

/// Longest power-law-like window of a decaying series (index range, inclusive).
/// Throws WindowTooShort when nothing spans a decade.
std::pair<std::size_t, std::size_t> algebraic_window(const std::vector<double>& t, const std::vector<double>& y);

struct PhaseReport {
  double T0 = kNaN;
  double T1 = kNaN;
  double T2 = kNaN;
  std::vector<std::string> not_reached;
  FitResult algebraic;
  double algebraic_constant = kNaN;  ///< sup gap t^{1/2} / V_T^2 in the window
  FitResult exponential;
  FitResult shift_tail;
  double delta_c = kNaN;
  double delta_x = kNaN;
  double V_sup = kNaN;
  double W0_measured = kNaN;
  double plateau_start = kNaN;
  double plateau_end = kNaN;
  double plateau_max_deviation = kNaN;
  double trusted_until = kNaN;
  PhaseThresholds thresholds;
  std::vector<std::string> notes;
};

/// Which gap, excess mass and closeness measure a scenario uses.
struct PhaseSignals {
  std::vector<double> t, gap, gap_glued, V, linf;
};
PhaseSignals phase_signals(const DiagnosticsSeries& series, Problem problem);

struct AlgebraicFit {
  FitResult fit;
  double constant = kNaN;      ///< sup gap t^{1/2} / V_T^2 over the window
  std::size_t first = 0, last = 0;
  std::vector<double> t, ratio;
};

/// Algebraic window and power-law fit of the scenario's gap, searched over
/// trusted snapshots before T2 with gap above the fit floor. Throws WindowTooShort.
AlgebraicFit fit_algebraic(const DiagnosticsSeries& series, const Scenario& s);

PhaseReport detect_phases(const DiagnosticsSeries& series, const Scenario& s,
                          const Potential& p = Potential::quartic());

}  // namespace chflow
