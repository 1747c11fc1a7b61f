#include "chflow/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "chflow/error.hpp"

namespace chflow {

namespace {

double sum_squares(const Field& u) {
  double s = 0.0;
  for (double v : u.values) s += v * v;
  return s * u.grid.dx();
}

// C(a) = integral u(x) w(x - a) dx as a trigonometric polynomial in a.
struct Correlation {
  const Grid& g;
  std::vector<Complex> ch;

  double eval(double a, int order) const {
    const std::size_t nyq = g.size() / 2;
    double s = 0.0;
    for (std::size_t j = 0; j <= nyq; ++j) {
      const double k = g.wavenumber(j);
      const double wj = (j == 0 || j == nyq) ? 1.0 : 2.0;
      Complex term = ch[j] * std::polar(1.0, k * a);
      for (int r = 0; r < order; ++r) term *= Complex(0.0, k);
      s += wj * term.real();
    }
    const double n = static_cast<double>(g.size());
    return s * g.period() / (n * n);
  }
};

}  // namespace

ProjectionResult project_bump(const Field& u, const BumpProfile& w) {
  const Grid& g = u.grid;
  if (!(g == w.grid())) throw Error(ErrorCode::InvalidArgument, "projection needs a common grid");
  auto& sp = spectral(g);
  const std::size_t n = g.size();
  const auto uh = sp.forward(u.values);
  const auto wh = sp.forward(w.samples.values);
  Correlation corr{g, std::vector<Complex>(g.modes())};
  for (std::size_t j = 0; j < g.modes(); ++j) corr.ch[j] = uh[j] * std::conj(wh[j]);

  // all grid shifts at once: C(i dx) = (2L / n) * inverse(ch)[i]
  const auto raw = sp.inverse(corr.ch);
  const double base = sum_squares(u) + sum_squares(w.samples);
  const double scale = g.period() / static_cast<double>(n);
  std::vector<double> J(n);
  for (std::size_t i = 0; i < n; ++i) J[i] = base - 2.0 * scale * raw[i];

  const double flat_tol = 1e-12 * std::max(1.0, base);
  const double jmin = *std::min_element(J.begin(), J.end());
  std::size_t best = 0, flat = 0;
  double best_abs = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (J[i] - jmin > flat_tol) continue;
    ++flat;
    const double a = std::abs(g.wrap(static_cast<double>(i) * g.dx()));
    if (a < best_abs) {
      best_abs = a;
      best = i;
    }
  }
  if (flat * 10 >= n) throw Error(ErrorCode::DegenerateProjection, "objective flat over >= 10% of shifts");

  ProjectionResult out;
  double second = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t d = std::min((i + n - best) % n, (best + n - i) % n);
    if (d <= 2) continue;
    if (J[i] <= J[(i + 1) % n] && J[i] <= J[(i + n - 1) % n]) second = std::min(second, J[i]);
  }
  const double jbest = std::max(J[best], 0.0);
  out.unique = !(second <= 1.01 * jbest);
  out.second_objective = std::isfinite(second) ? second : 0.0;

  double a = g.wrap(static_cast<double>(best) * g.dx());
  for (int it = 0; it < 50; ++it) {
    const double d1 = corr.eval(a, 1);
    const double d2 = corr.eval(a, 2);
    if (!(d2 < 0.0)) break;
    const double step = std::clamp(d1 / d2, -g.dx(), g.dx());
    a -= step;
    if (std::abs(step) < 1e-14) break;
  }
  a = g.wrap(a);

  out.handle.kind = ProfileHandle::Kind::Bump;
  out.handle.shift = a;
  out.orthogonality_residual = std::abs(corr.eval(a, 1));
  const Field wc = w.shifted(a);
  out.objective = std::sqrt(sum_squares(u - wc));
  return out;
}

ZeroSet find_zeros(const Field& u, double t) { return ZeroSet{interpolant_zeros(u, 1e-12), t}; }

bool dominant_zero_pair(const Field& u, const std::vector<double>& zeros, double& a, double& b) {
  const Grid& g = u.grid;
  const std::size_t m = zeros.size();
  if (m < 2) return false;
  auto& sp = spectral(g);
  const auto uh = sp.forward(u.values);
  const std::size_t n = g.size();
  double best = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t i = 0; i < m; ++i) {
    if (!(sp.interpolate(uh, zeros[i], 1) > 0.0)) continue;
    const double za = zeros[i];
    const double zb = zeros[(i + 1) % m];
    double gap = g.wrap(zb - za);
    if (gap <= 0.0) gap += g.period();
    // grid sum of u over (za, za + gap)
    auto j = static_cast<std::size_t>(std::floor((za + g.half_length()) / g.dx())) + 1;
    double s = 0.0;
    for (; static_cast<double>(j) * g.dx() - g.half_length() - za < gap; ++j) s += u[j % n];
    if (s > best) {
      best = s;
      a = za;
      b = zb;
      found = true;
    }
  }
  return found;
}

namespace {

// Minimizes phi(al) = sum over the half domain of (v(y - al) - s u)^2 dx.
struct HalfFit {
  const KinkProfile& v;
  const std::vector<double>& y;
  const std::vector<double>& u;
  double sgn;
  double dx;

  double phi(double al) const {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double d = v.value(y[i] - al) - sgn * u[i];
      s += d * d;
    }
    return s * dx;
  }
  // F = -phi' / 2 and its derivative
  void residual(double al, double& F, double& dF) const {
    F = 0.0;
    dF = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double z = y[i] - al;
      const double d = v.value(z) - sgn * u[i];
      const double v1 = v.derivative(z, 1);
      F += d * v1;
      dF += -v1 * v1 - d * v.derivative(z, 2);
    }
    F *= dx;
    dF *= dx;
  }

  struct Result {
    double al, F, J, second;
  };

  Result solve(double lo, double hi) const {
    // coarse scan at unit spacing, a finer pass, then Newton
    std::vector<double> grid_al, vals;
    for (double al = lo; al <= hi + 1e-12; al += 1.0) {
      grid_al.push_back(al);
      vals.push_back(phi(al));
    }
    if (grid_al.empty()) throw Error(ErrorCode::SeparationViolated, "empty search interval");
    const auto ib = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
    double second = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (i + 1 >= ib && i <= ib + 1) continue;
      const bool left = i == 0 || vals[i] <= vals[i - 1];
      const bool right = i + 1 == vals.size() || vals[i] <= vals[i + 1];
      if (left && right) second = std::min(second, vals[i]);
    }
    double al = grid_al[ib];
    double jb = vals[ib];
    for (double d = -1.0; d <= 1.0 + 1e-12; d += 0.1) {
      const double c = std::clamp(grid_al[ib] + d, lo, hi);
      const double j = phi(c);
      if (j < jb) {
        jb = j;
        al = c;
      }
    }
    double F = 0.0, dF = 0.0;
    for (int it = 0; it < 50; ++it) {
      residual(al, F, dF);
      if (!(dF < 0.0)) break;
      const double step = std::clamp(F / dF, -0.5, 0.5);
      al -= step;
      if (std::abs(step) < 1e-13) break;
    }
    residual(al, F, dF);
    return {al, F, phi(al), second};
  }
};

}  // namespace

ProjectionResult project_glued(const Field& u, const Potential& p, const GluedOptions& opt) {
  const Grid& g = u.grid;
  const double L = opt.half_length > 0.0 ? opt.half_length : g.half_length();
  const auto zeros = interpolant_zeros(u, 1e-12);
  if (zeros.size() < 2) throw Error(ErrorCode::NoValidZeros, std::to_string(zeros.size()) + " zeros");
  double a = 0.0, b = 0.0;
  if (!dominant_zero_pair(u, zeros, a, b)) throw Error(ErrorCode::NoValidZeros, "no up/down zero pair");
  double gap = g.wrap(b - a);
  if (gap <= 0.0) gap += g.period();
  if (gap < L / 16.0) throw Error(ErrorCode::NoValidZeros, "zeros closer than L/16");
  const double q = g.wrap(a + 0.5 * gap);

  std::vector<double> yn, un, yp, up;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double y = g.wrap(g.x(i) - q);
    if (y < 0.0) {
      yn.push_back(y);
      un.push_back(u[i]);
    } else {
      yp.push_back(y);
      up.push_back(u[i]);
    }
  }
  const KinkProfile v = kink(p, 0.0);
  const double H = g.half_length();
  const HalfFit left{v, yn, un, 1.0, g.dx()};
  const HalfFit right{v, yp, up, -1.0, g.dx()};
  const auto ra = left.solve(-H + 1.0, -1.0);
  const auto rb = right.solve(1.0, H - 1.0);

  ProjectionResult out;
  out.handle.kind = ProfileHandle::Kind::Glued;
  out.handle.glued = {q, q + ra.al, q + rb.al};
  out.handle.shift = q;
  out.orthogonality_residual = std::max(std::abs(ra.F), std::abs(rb.F));
  out.unique = !(ra.second <= 1.01 * ra.J) && !(rb.second <= 1.01 * rb.J);
  out.second_objective = std::min(ra.second, rb.second);
  if (!std::isfinite(out.second_objective)) out.second_objective = 0.0;

  out.glued.emplace(glue_kinks(p, q, q + ra.al, q + rb.al, L, opt.on_torus));
  const Field wt = out.glued->sample(g);
  out.objective = std::sqrt(sum_squares(u - wt));
  return out;
}

ShiftSeries track_positions(const std::vector<double>& t, const std::vector<double>& c,
                            const std::vector<double>& alpha, const std::vector<double>& beta, double period) {
  auto wrap = [period](double d) {
    double r = std::fmod(d + 0.5 * period, period);
    if (r < 0.0) r += period;
    return r - 0.5 * period;
  };
  auto unwrap = [&](const std::vector<double>& raw) {
    std::vector<double> out(raw.size(), std::nan(""));
    double prev = std::nan("");
    for (std::size_t k = 0; k < raw.size(); ++k) {
      if (!std::isfinite(raw[k])) continue;
      out[k] = std::isfinite(prev) ? prev + wrap(raw[k] - prev) : raw[k];
      prev = out[k];
    }
    return out;
  };
  ShiftSeries s;
  s.t = t;
  s.c = unwrap(c);
  s.alpha = alpha.empty() ? std::vector<double>(t.size(), std::nan("")) : unwrap(alpha);
  s.beta = beta.empty() ? std::vector<double>(t.size(), std::nan("")) : unwrap(beta);
  double dc = 0.0, dx = 0.0;
  double a0 = std::nan(""), b0 = std::nan("");
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (std::isfinite(s.c[k]) && std::isfinite(s.c[0])) dc = std::max(dc, std::abs(s.c[k] - s.c[0]));
    if (std::isfinite(s.alpha[k])) {
      if (!std::isfinite(a0)) a0 = s.alpha[k];
      dx = std::max(dx, std::abs(s.alpha[k] - a0));
    }
    if (std::isfinite(s.beta[k])) {
      if (!std::isfinite(b0)) b0 = s.beta[k];
      dx = std::max(dx, std::abs(s.beta[k] - b0));
    }
    s.delta_c.push_back(dc);
    s.delta_x.push_back(dx);
  }
  return s;
}

ShiftSeries track(const Trajectory& traj, const BumpProfile& w, const Potential& p,
                  const std::optional<GluedOptions>& glued) {
  std::vector<double> c, al, be;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    try {
      c.push_back(project_bump(traj.snapshots[k], w).handle.shift);
      if (glued) {
        const auto r = project_glued(traj.snapshots[k], p, *glued);
        al.push_back(r.handle.glued.alpha);
        be.push_back(r.handle.glued.beta);
      }
    } catch (const Error& e) {
      throw Error(e.code(), "snapshot " + std::to_string(k) + ": " + e.what());
    }
  }
  return track_positions(traj.times, c, al, be, traj.grid.period());
}

}  // namespace chflow
