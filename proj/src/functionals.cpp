#include "chflow/functionals.hpp"

#include <algorithm>
#include <cmath>

#include "chflow/error.hpp"

namespace chflow {

double energy(const Field& u, const Potential& p) {
  auto& sp = spectral(u.grid);
  const auto uhat = sp.forward(u.values);
  const double grad = 0.5 * sp.weighted_l2_squared(uhat, [](double k) { return k; });
  double pot = 0.0;
  for (double v : u.values) pot += p.eval(v);
  return grad + pot * u.grid.dx();
}

namespace {

std::vector<Complex> mu_hat(const Field& u, const Potential& p, bool dealias) {
  auto& sp = spectral(u.grid);
  const Grid& g = u.grid;
  auto uhat = sp.forward(u.values);
  std::vector<double> nl(g.size());
  p.apply_d1(u.values, nl);
  const auto nhat = sp.forward(nl);
  for (std::size_t j = 0; j < uhat.size(); ++j) {
    const double k = g.wavenumber(j);
    const Complex n = (!dealias || g.dealias_keep(j)) ? nhat[j] : Complex(0.0);
    uhat[j] = -k * k * uhat[j] - n;
  }
  return uhat;
}

}  // namespace

Field chemical_potential(const Field& u, const Potential& p, bool dealias) {
  const auto mh = mu_hat(u, p, dealias);
  return Field(u.grid, spectral(u.grid).inverse(mh));
}

double dissipation(const Field& u, const Potential& p, bool dealias) {
  const auto mh = mu_hat(u, p, dealias);
  auto& sp = spectral(u.grid);
  const std::size_t nyq = u.grid.size() / 2;
  // mu_x drops the Nyquist mode
  return sp.weighted_l2_squared(mh, [&, k_nyq = u.grid.wavenumber(nyq)](double k) {
    return k == k_nyq ? 0.0 : k;
  });
}

double hminus1_norm(const Field& f) {
  const double m = f.mean();
  if (std::abs(m) > 1e-10) throw Error(ErrorCode::NonZeroMean, "mean " + std::to_string(m));
  auto& sp = spectral(f.grid);
  const auto fh = sp.forward(f.values);
  return std::sqrt(sp.weighted_l2_squared(fh, [](double k) { return k == 0.0 ? 0.0 : 1.0 / k; }));
}

double excess_mass(const Field& u, const Field& ref) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += std::abs(u[i] - ref[i]);
  return s * u.grid.dx();
}

double excess_mass_minus_one(const Field& u) {
  double s = 0.0;
  for (double v : u.values) s += std::abs(v + 1.0);
  return s * u.grid.dx();
}

double discrepancy_sup(const Field& u, const Potential& p) {
  const auto ux = spectral(u.grid).derivative(u.values, 1);
  double m = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) m = std::max(m, std::abs(0.5 * ux[i] * ux[i] - p.eval(u[i])));
  return m;
}

double h1_squared(const Field& f) {
  auto& sp = spectral(f.grid);
  const auto fh = sp.forward(f.values);
  return sp.weighted_l2_squared(fh, [](double k) { return std::sqrt(1.0 + k * k); });
}

double h3_seminorm_squared(const Field& f) {
  auto& sp = spectral(f.grid);
  const auto fh = sp.forward(f.values);
  return sp.weighted_l2_squared(fh, [](double k) {
    const double k2 = k * k;
    return std::sqrt(k2 + k2 * k2 + k2 * k2 * k2);
  });
}

}  // namespace chflow
