#include "chflow/potential.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "chflow/error.hpp"

namespace chflow {

Potential::Potential(Kind kind, Fn g, Fn d1, Fn d2, Fn d3)
    : kind_(kind), g_(std::move(g)), d1_(std::move(d1)), d2_(std::move(d2)), d3_(std::move(d3)) {
  gpp_plus_ = this->d2(1.0);
  gpp_minus_ = this->d2(-1.0);
}

Potential Potential::quartic() { return Potential(Kind::Quartic, {}, {}, {}, {}); }

Potential Potential::custom(Fn g, Fn d1, Fn d2, Fn d3) {
  if (!g || !d1 || !d2 || !d3) {
    throw Error(ErrorCode::InvalidArgument, "custom potential needs G and three derivatives");
  }
  return Potential(Kind::Custom, std::move(g), std::move(d1), std::move(d2), std::move(d3));
}

void Potential::apply_d1(std::span<const double> u, std::span<double> out) const {
  if (kind_ == Kind::Quartic) {
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] * u[i] * u[i] - u[i];
  } else {
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = d1_(u[i]);
  }
}

bool ValidationReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (const auto& c : checks) {
    os << c.name << "=" << (c.passed ? "pass" : "FAIL") << "(worst " << c.worst_violation << ") ";
  }
  return os.str();
}

ValidationReport check_assumptions(const Potential& p, int samples, double tol) {
  if (samples < 16) throw Error(ErrorCode::InvalidArgument, "validation needs at least 16 samples");

  ValidationReport rep;
  std::vector<double> us(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) us[i] = -2.0 + 4.0 * i / (samples - 1);

  const double wells = std::max(std::abs(p.eval(1.0)), std::abs(p.eval(-1.0)));
  rep.checks.push_back({"wells_zero", wells <= tol, wells});

  double pos = 0.0;
  bool positive = true;
  for (double u : us) {
    if (std::abs(u - 1.0) < 1e-12 || std::abs(u + 1.0) < 1e-12) continue;
    const double g = p.eval(u);
    if (!(g > 0.0)) {
      positive = false;
      pos = std::max(pos, -g);
    }
  }
  rep.checks.push_back({"positive_off_wells", positive, pos});

  double even = 0.0;
  for (double u : us) even = std::max(even, std::abs(p.eval(u) - p.eval(-u)));
  rep.checks.push_back({"even", even <= tol, even});

  double mono = 0.0;
  for (double u : us) {
    if (u < 0.0 || u > 1.0) continue;
    mono = std::max(mono, p.d1(u));
  }
  rep.checks.push_back({"nonincreasing_on_0_1", mono <= tol, std::max(mono, 0.0)});

  const double curv = std::min(p.gpp_plus(), p.gpp_minus());
  rep.checks.push_back({"nondegenerate_wells", curv > 0.0, curv > 0.0 ? 0.0 : -curv});
  return rep;
}

ValidationReport validate(const Potential& p, int samples) {
  auto rep = check_assumptions(p, samples);
  if (!rep.all_passed()) throw Error(ErrorCode::PotentialInvalid, rep.summary());
  return rep;
}

}  // namespace chflow
