#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "chflow/experiments.hpp"
#include "chflow/functionals.hpp"
#include "chflow/profiles.hpp"

namespace chflow {

/// Ratios at or below this denominator are excluded and counted.
inline constexpr double kRatioFloor = 1e-14;

struct InequalityReport {
  std::string name;
  std::vector<double> t;
  std::vector<double> ratio;
  double worst = kNaN;   ///< largest ratio
  double min = kNaN;     ///< smallest ratio
  double cap = std::numeric_limits<double>::infinity();
  double lower_cap = 0.0;
  bool pass = true;      ///< vacuous when every snapshot is excluded
  std::size_t excluded = 0;
  std::size_t gated = 0; ///< snapshots outside the lemma's hypotheses
  std::string scenario;
  double L = kNaN;
  std::size_t n = 0;
  std::vector<std::pair<std::string, double>> extra;

  void add(double time, double value);
  /// Sets worst/min/pass from the collected ratios.
  void finish();
  double extra_value(const std::string& key) const;
};

/// gap / (D^{1/3} (V + 1)^{4/3}) at every trusted snapshot with gap <= 4 e_*.
InequalityReport check_nash(const DiagnosticsSeries& series, const Scenario& s, double cap = 10.0,
                            const Potential& p = Potential::quartic());

enum class EedPhase { Glued, Bump, MinusOne };

struct EedReport {
  InequalityReport energy;       ///< (int f^2 + f_x^2 + slack) / (|gap| + slack)
  InequalityReport dissipation;  ///< int f_x^2 + f_xx^2 + f_xxx^2 / D
  InequalityReport gap_by_dissipation;  ///< gap / (L^2 D), torus only
};

/// Throws PhaseHypothesisUnmet when no snapshot satisfies the phase gate.
EedReport check_eed(const DiagnosticsSeries& series, const Scenario& s, EedPhase phase, double cap = 25.0);

/// Gap and norms of f = u - w_c for a single field, with c from the L2 projection.
struct EedSample {
  double gap = kNaN;
  double h1 = kNaN;
  double h3 = kNaN;
  double D = kNaN;
  double shift = kNaN;
};
EedSample eed_sample(const Field& u, const BumpProfile& w, const Potential& p);

/// Power-law fit over the detected algebraic window; ratios are
/// gap t^{1/2} / V_T^2. Throws WindowTooShort.
InequalityReport check_ode_decay(const DiagnosticsSeries& series, const Scenario& s, double cap = 10.0);

struct DissipationReport {
  InequalityReport by_energy;  ///< D(t) / max{gap(t/2)^2, gap(t/2)/t}
  InequalityReport growth;     ///< (dD/dt) / D^{3/2} on increasing stretches
  InequalityReport integral;   ///< int_0^T D^{3/4} dt / V_T
};
DissipationReport check_dissipation_bounds(const DiagnosticsSeries& series, const Scenario& s,
                                           double cap = 20.0);

/// Grid points with lo <= x <= hi.
struct HalfInterval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = 0.0;
};

/// int_I f^2 / (x^2 + 1) / int_I f_x^2 after removing the v_x component on I.
/// NaN when both integrals vanish.
double check_hardy(const Field& f, const KinkProfile& v, const HalfInterval& domain);

struct SpectrumReport {
  std::vector<double> eigenvalues;  ///< lowest five, ascending
  double lambda1 = kNaN;            ///< translation mode
  double overlap = kNaN;            ///< |<e1, w_x>| / (|e1| |w_x|)
  double lambda2 = kNaN;            ///< breathing mode
  double lambda3 = kNaN;
  int iterations = 0;
  double max_residual = kNaN;
};

/// Lowest eigenpairs of -d_xx + G''(w) in Fourier collocation by shifted block
/// inverse iteration with Rayleigh-Ritz. Throws EigsNotConverged.
SpectrumReport check_linearization_spectrum(const BumpProfile& w, const Potential& p,
                                            std::uint64_t seed = 7);

/// The collocation matrix itself, exposed for cross-checks.
Eigen::MatrixXd linearization_matrix(const BumpProfile& w, const Potential& p);

}  // namespace chflow
