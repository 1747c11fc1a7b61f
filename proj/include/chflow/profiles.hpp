#pragma once

#include <array>
#include <memory>
#include <utility>
#include <vector>

#include "chflow/grid.hpp"
#include "chflow/potential.hpp"

namespace chflow {

namespace detail {
struct KinkTable;
}

/// Increasing heteroclinic v_a with v(a) = 0, solving -v'' + G'(v) = 0.
class KinkProfile {
 public:
  KinkProfile(const Potential& p, double shift);

  double shift() const noexcept { return shift_; }
  double value(double x) const { return derivative(x, 0); }
  /// d^order v_a / dx^order for order in 0..3.
  double derivative(double x, int order) const;
  /// Residual -v'' + G'(v) at x, evaluated from the stored representation.
  double residual(double x) const;
  const Potential& potential() const noexcept { return potential_; }

 private:
  Potential potential_;
  std::shared_ptr<const detail::KinkTable> table_;
  double shift_;
};

KinkProfile kink(const Potential& p, double a);

/// e_* = integral of 2 G(v) over the line, via the Modica-Mortola substitution.
double kink_energy(const Potential& p);
/// Energy of the centered kink restricted to |x| >= radius.
double kink_tail_energy(const Potential& p, double radius);

struct BumpOptions {
  double min_half_length = 16.0;
  int max_iterations = 50;
  double damping_floor = 1e-4;
  double tolerance = 1e-13;
};

/// Mean-constrained torus minimizer w with its maximum at x = 0.
struct BumpProfile {
  Field samples;
  double shift = 0.0;
  double lagrange = 0.0;
  double mean = 0.0;
  std::pair<double, double> zeros{0.0, 0.0};
  double residual = 0.0;       ///< sup |-w'' + G'(w) - lagrange|
  double energy = 0.0;
  double energy_excess = 0.0;  ///< E(w) - 2 e_*
  double c0 = 0.0;             ///< |E(w) - 2 e_*| = exp(-L / c0)
  int newton_iterations = 0;

  const Grid& grid() const noexcept { return samples.grid; }
  /// Samples of w(. - c).
  Field shifted(double c) const;
};

BumpProfile solve_bump(const Grid& grid, const Potential& p, double mean, const BumpOptions& opt = {});

/// Locates the maximum of u (quadratic fit, then Newton on the interpolant's
/// derivative) and returns u circularly shifted so that the maximum sits at x = 0.
Field center_maximum(const Field& u, double* found_at = nullptr);

struct GluedParams {
  double q = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
};

/// Increasing kink at alpha left of q, decreasing kink at beta right of q,
/// joined by degree-7 Hermite interpolants on (q-1, q+1) and, on the torus,
/// on (q+L-1, q+L+1).
class GluedKinkProfile {
 public:
  GluedKinkProfile(const Potential& p, GluedParams params, double half_length, bool on_torus);

  const GluedParams& params() const noexcept { return params_; }
  double half_length() const noexcept { return half_length_; }
  bool on_torus() const noexcept { return on_torus_; }

  double value(double x) const { return derivative(x, 0); }
  double derivative(double x, int order) const;
  Field sample(const Grid& g) const;

  /// ||w - 1||_{H^1((q-1, q+1))}.
  double h1_deviation_near() const noexcept { return h1_near_; }
  /// ||w + 1||_{H^1((q+L-1, q+L+1))} on the torus, 0 on the line.
  double h1_deviation_far() const noexcept { return h1_far_; }
  /// Measured constant with h1_deviation_near = exp(-L / c0).
  double c0() const noexcept { return c0_; }
  /// Largest one-sided jump over derivative orders 0..3 at the junctions.
  double max_junction_jump() const noexcept { return max_jump_; }

 private:
  struct Patch {
    double x0 = 0.0;
    double h = 2.0;
    std::array<double, 8> coeffs{};
    double eval(double x, int order) const;
  };

  double outer(double y, int order) const;

  KinkProfile kink_;
  GluedParams params_;
  double half_length_;
  bool on_torus_;
  Patch near_;
  Patch far_;
  double h1_near_ = 0.0;
  double h1_far_ = 0.0;
  double c0_ = 0.0;
  double max_jump_ = 0.0;
};

/// Checks the separation constraints, builds the profile, and verifies the
/// exponential smallness of the interpolation region.
GluedKinkProfile glue_kinks(const Potential& p, double q, double alpha, double beta, double half_length,
                            bool on_torus);

/// chi = 1 on [-w/2, w/2] + shift and -1 elsewhere.
struct SharpInterface {
  double half_width = 0.0;
  double shift = 0.0;
  double value(double x) const;
  Field sample(const Grid& g) const;
};

}  // namespace chflow
