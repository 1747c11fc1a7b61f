#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace chflow {

/// Double-well potential G with analytically coded derivatives up to order three.
class Potential {
 public:
  enum class Kind { Quartic, Custom };
  using Fn = std::function<double(double)>;

  /// G(u) = (1 - u^2)^2 / 4.
  static Potential quartic();
  /// Closures for G, G', G'', G'''. No differentiation is done for you.
  static Potential custom(Fn g, Fn d1, Fn d2, Fn d3);

  Kind kind() const noexcept { return kind_; }

  double eval(double u) const { return kind_ == Kind::Quartic ? 0.25 * (1 - u * u) * (1 - u * u) : g_(u); }
  double d1(double u) const { return kind_ == Kind::Quartic ? u * u * u - u : d1_(u); }
  double d2(double u) const { return kind_ == Kind::Quartic ? 3 * u * u - 1 : d2_(u); }
  double d3(double u) const { return kind_ == Kind::Quartic ? 6 * u : d3_(u); }

  double gpp_plus() const noexcept { return gpp_plus_; }
  double gpp_minus() const noexcept { return gpp_minus_; }

  /// out[i] = G'(u[i]).
  void apply_d1(std::span<const double> u, std::span<double> out) const;

 private:
  Potential(Kind kind, Fn g, Fn d1, Fn d2, Fn d3);

  Kind kind_;
  Fn g_, d1_, d2_, d3_;
  double gpp_plus_ = 0.0;
  double gpp_minus_ = 0.0;
};

struct AssumptionCheck {
  std::string name;
  bool passed = false;
  double worst_violation = 0.0;
};

struct ValidationReport {
  std::vector<AssumptionCheck> checks;
  bool all_passed() const;
  std::string summary() const;
};

/// Evaluates the double-well assumptions on a uniform sample of [-2, 2]
/// without throwing.
ValidationReport check_assumptions(const Potential& p, int samples, double tol = 1e-12);

/// Same as check_assumptions, but throws PotentialInvalid when any check fails.
ValidationReport validate(const Potential& p, int samples);

}  // namespace chflow
