#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "chflow/grid.hpp"
#include "chflow/potential.hpp"

namespace chflow {

/// E(u) = integral of u_x^2 / 2 + G(u); gradient term by Parseval.
double energy(const Field& u, const Potential& p);

/// D(u) = integral of (mu_x)^2 with mu = u_xx - G'(u). When dealias is set the
/// spectrum of G'(u) is truncated by the 2/3 rule, as in the time stepper.
double dissipation(const Field& u, const Potential& p, bool dealias = true);

/// Chemical potential mu = u_xx - G'(u) on the grid.
Field chemical_potential(const Field& u, const Potential& p, bool dealias = true);

/// Homogeneous H^{-1} norm; throws NonZeroMean when |mean(f)| > 1e-10.
double hminus1_norm(const Field& f);

/// integral |u - ref| dx.
double excess_mass(const Field& u, const Field& ref);
/// integral |u + 1| dx.
double excess_mass_minus_one(const Field& u);

/// sup |u_x^2 / 2 - G(u)|.
double discrepancy_sup(const Field& u, const Potential& p);

/// integral f^2 + f_x^2 and integral f_x^2 + f_xx^2 + f_xxx^2, spectrally.
double h1_squared(const Field& f);
double h3_seminorm_squared(const Field& f);

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// One diagnostics snapshot. Fields that do not apply to a scenario stay NaN.
struct DiagnosticsRecord {
  double t = 0.0;
  double E = kNaN;
  double D = kNaN;
  double gap_bump = kNaN;
  double gap_glued = kNaN;
  double V = kNaN;
  double V_tilde = kNaN;
  double V_minus = kNaN;
  double shift_c = kNaN;
  double zero_a = kNaN;
  double zero_b = kNaN;
  double xi_sup = kNaN;
  double linf_f = kNaN;
  bool trusted = true;

  // Not part of the CSV schema; used by the inequality checks.
  std::vector<double> zeros;
  double glued_q = kNaN;
  double glued_alpha = kNaN;
  double glued_beta = kNaN;
  double h1_f = kNaN;   ///< integral f_c^2 + f_c,x^2 against the bump
  double h3_f = kNaN;   ///< integral f_c,x^2 + f_c,xx^2 + f_c,xxx^2
  double h1_ft = kNaN;  ///< same two norms against the glued profile (or -1)
  double h3_ft = kNaN;
};

using DiagnosticsSeries = std::vector<DiagnosticsRecord>;

}  // namespace chflow
