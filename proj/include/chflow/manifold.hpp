#pragma once

#include <optional>
#include <vector>

#include "chflow/grid.hpp"
#include "chflow/profiles.hpp"
#include "chflow/solver.hpp"

namespace chflow {

/// A slow-manifold element: kink shift, bump shift, or glued triple.
struct ProfileHandle {
  enum class Kind { Kink, Bump, Glued };
  Kind kind = Kind::Bump;
  double shift = 0.0;
  GluedParams glued;
};

struct ProjectionResult {
  ProfileHandle handle;
  double objective = 0.0;                ///< L2 distance achieved
  double orthogonality_residual = 0.0;
  bool unique = true;                    ///< no second local optimum within 1%
  double second_objective = 0.0;         ///< squared distance at the runner-up (0 if none)
  std::optional<GluedKinkProfile> glued; ///< set by project_glued
};

/// Best shift c of w(. - c) in L2. Throws DegenerateProjection.
ProjectionResult project_bump(const Field& u, const BumpProfile& w);

struct GluedOptions {
  double half_length = 0.0;  ///< L of the two-parameter family
  bool on_torus = true;      ///< false: line profiles on a large periodic surrogate
};

/// Half-domain L2 projection onto glued kink profiles about the midpoint q of
/// the dominant zero pair. Throws NoValidZeros, SeparationViolated.
ProjectionResult project_glued(const Field& u, const Potential& p, const GluedOptions& opt);

struct ZeroSet {
  std::vector<double> positions;
  double t = 0.0;
};

ZeroSet find_zeros(const Field& u, double t = 0.0);

/// Zero pair (up-crossing a, down-crossing b) enclosing the largest integral of u.
/// Returns false when u has no such pair.
bool dominant_zero_pair(const Field& u, const std::vector<double>& zeros, double& a, double& b);

struct ShiftSeries {
  std::vector<double> t;
  std::vector<double> c;        ///< unwrapped
  std::vector<double> alpha;    ///< unwrapped, NaN when not tracked
  std::vector<double> beta;
  std::vector<double> delta_c;  ///< sup_{t' <= t} |c(t') - c(0)|
  std::vector<double> delta_x;  ///< same for the glued centers
};

/// Unwraps raw positions on a torus of the given period and accumulates the
/// running excursions.
ShiftSeries track_positions(const std::vector<double>& t, const std::vector<double>& c,
                            const std::vector<double>& alpha, const std::vector<double>& beta, double period);

/// Projects every snapshot of traj onto the bump family (and optionally the
/// glued family) and tracks the shifts. Errors carry the snapshot index.
ShiftSeries track(const Trajectory& traj, const BumpProfile& w, const Potential& p,
                  const std::optional<GluedOptions>& glued = std::nullopt);

}  // namespace chflow
