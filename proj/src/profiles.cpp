#include "chflow/profiles.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <numbers>

#include "chflow/error.hpp"
#include "chflow/functionals.hpp"

namespace chflow {

namespace detail {

// Samples of the centered kink on x = i*h, i = 0..N, for x >= 0. Beyond
// x_tail the linearization 1 - v = delta * exp(-mu (x - x_tail)) takes over.
struct KinkTable {
  double h = 0.01;
  std::vector<double> v, v1, v2;
  double x_tail = 0.0;
  double delta = 0.0;
  double mu = 0.0;
};

}  // namespace detail

namespace {

namespace odeint = boost::numeric::odeint;

constexpr double kTailThreshold = 1e-8;

std::shared_ptr<const detail::KinkTable> build_kink_table(const Potential& p) {
  using State = std::array<double, 1>;
  auto rhs = [&p](const State& s, State& ds, double) { ds[0] = std::sqrt(std::max(2.0 * p.eval(s[0]), 0.0)); };

  auto t = std::make_shared<detail::KinkTable>();
  t->mu = std::sqrt(p.gpp_plus());
  auto stepper = odeint::make_controlled(1e-14, 1e-14, odeint::runge_kutta_dopri5<State>());

  State s{0.0};
  t->v.push_back(0.0);
  std::size_t i = 0;
  while (1.0 - s[0] >= kTailThreshold) {
    const double x0 = static_cast<double>(i) * t->h;
    if (x0 > 400.0) throw Error(ErrorCode::ProfileSolveFailed, "kink does not reach the well");
    double dt = t->h / 4.0;
    odeint::integrate_adaptive(stepper, rhs, s, x0, x0 + t->h, dt);
    ++i;
    if (!std::isfinite(s[0]) || !(s[0] > t->v.back()) || s[0] > 1.0) {
      throw Error(ErrorCode::ProfileSolveFailed, "kink integration lost monotonicity");
    }
    t->v.push_back(s[0]);
  }
  t->x_tail = static_cast<double>(i) * t->h;
  t->delta = 1.0 - s[0];
  for (double v : t->v) {
    t->v1.push_back(std::sqrt(std::max(2.0 * p.eval(v), 0.0)));
    t->v2.push_back(p.d1(v));
  }
  return t;
}

// Quintic Hermite on [0, 1] in the local variable; order 0 or 2.
double hermite5(double t, double y0, double d0, double s0, double y1, double d1, double s1, int order) {
  const double t2 = t * t, t3 = t2 * t;
  if (order == 0) {
    const double t4 = t3 * t, t5 = t4 * t;
    return y0 * (1 - 10 * t3 + 15 * t4 - 6 * t5) + d0 * (t - 6 * t3 + 8 * t4 - 3 * t5) +
           s0 * (0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5) + y1 * (10 * t3 - 15 * t4 + 6 * t5) +
           d1 * (-4 * t3 + 7 * t4 - 3 * t5) + s1 * (0.5 * t3 - t4 + 0.5 * t5);
  }
  return y0 * (-60 * t + 180 * t2 - 120 * t3) + d0 * (-36 * t + 96 * t2 - 60 * t3) +
         s0 * (1 - 9 * t + 18 * t2 - 10 * t3) + y1 * (60 * t - 180 * t2 + 120 * t3) +
         d1 * (-24 * t + 84 * t2 - 60 * t3) + s1 * (3 * t - 12 * t2 + 10 * t3);
}

// v (order 0) or v'' from the table at z >= 0 inside the tabulated range.
double table_hermite(const detail::KinkTable& t, double z, int order) {
  const std::size_t last = t.v.size() - 2;
  const std::size_t i = std::min(static_cast<std::size_t>(z / t.h), last);
  const double s = (z - static_cast<double>(i) * t.h) / t.h;
  const double h = t.h;
  const double r = hermite5(s, t.v[i], h * t.v1[i], h * h * t.v2[i], t.v[i + 1], h * t.v1[i + 1],
                            h * h * t.v2[i + 1], order);
  return order == 0 ? r : r / (h * h);
}

// sech^2(s) without overflow.
double sech2(double s) {
  const double e = std::exp(-2.0 * std::abs(s));
  return 4.0 * e / ((1.0 + e) * (1.0 + e));
}

int factorial(int k) { return k <= 1 ? 1 : k * factorial(k - 1); }

}  // namespace

KinkProfile::KinkProfile(const Potential& p, double shift) : potential_(p), shift_(shift) {
  if (p.kind() == Potential::Kind::Custom) table_ = build_kink_table(p);
}

KinkProfile kink(const Potential& p, double a) { return KinkProfile(p, a); }

double KinkProfile::derivative(double x, int order) const {
  if (order < 0 || order > 3) throw Error(ErrorCode::InvalidArgument, "kink derivative order must be 0..3");
  const double y = x - shift_;
  if (!table_) {
    const double s = y / std::numbers::sqrt2;
    const double th = std::tanh(s);
    const double q = sech2(s);
    switch (order) {
      case 0: return th;
      case 1: return q / std::numbers::sqrt2;
      case 2: return -th * q;
      default: return (3.0 * th * th - 1.0) * q / std::numbers::sqrt2;
    }
  }
  const auto& t = *table_;
  const double sign = y < 0.0 ? -1.0 : 1.0;
  const double z = std::abs(y);
  // odd function: even orders flip sign
  const double parity = order % 2 == 0 ? sign : 1.0;
  if (z >= t.x_tail) {
    const double d = t.delta * std::exp(-t.mu * (z - t.x_tail));
    const double vals[4] = {1.0 - d, t.mu * d, -t.mu * t.mu * d, t.mu * t.mu * t.mu * d};
    return parity * vals[order];
  }
  const double v = table_hermite(t, z, 0);
  const double v1 = std::sqrt(std::max(2.0 * potential_.eval(v), 0.0));
  switch (order) {
    case 0: return parity * v;
    case 1: return v1;
    case 2: return parity * potential_.d1(v);
    default: return potential_.d2(v) * v1;
  }
}

double KinkProfile::residual(double x) const {
  if (!table_) return -derivative(x, 2) + potential_.d1(derivative(x, 0));
  const double y = x - shift_;
  const double z = std::abs(y);
  const double sign = y < 0.0 ? -1.0 : 1.0;
  if (z >= table_->x_tail) {
    // linearized tail: residual is the neglected nonlinearity
    const double v = derivative(x, 0);
    return -derivative(x, 2) + potential_.d1(v);
  }
  const double v = sign * table_hermite(*table_, z, 0);
  const double vxx = sign * table_hermite(*table_, z, 2);
  return -vxx + potential_.d1(v);
}

double kink_energy(const Potential& p) {
  auto f = [&p](double u) { return std::sqrt(std::max(2.0 * p.eval(u), 0.0)); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -1.0, 1.0, 15, 1e-14);
}

double kink_tail_energy(const Potential& p, double radius) {
  if (radius < 0.0) throw Error(ErrorCode::InvalidArgument, "radius must be non-negative");
  // Both tails: 2 * integral_{v(R)}^{1} sqrt(2G), written in w = 1 - u.
  if (p.kind() == Potential::Kind::Quartic) {
    const double e = std::exp(-std::numbers::sqrt2 * radius);
    const double d = 2.0 * e / (1.0 + e);
    return std::numbers::sqrt2 * (d * d - d * d * d / 3.0);
  }
  const double d = 1.0 - kink(p, 0.0).value(radius);
  if (d <= 0.0) return 0.0;
  auto f = [&p](double w) { return std::sqrt(std::max(2.0 * p.eval(1.0 - w), 0.0)); };
  return 2.0 * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, d, 15, 1e-14);
}

Field BumpProfile::shifted(double c) const {
  return Field(samples.grid, spectral(samples.grid).shift(samples.values, c));
}

Field center_maximum(const Field& u, double* found_at) {
  const Grid& g = u.grid;
  const std::size_t n = g.size();
  const auto it = std::max_element(u.values.begin(), u.values.end());
  const auto i = static_cast<std::size_t>(it - u.values.begin());
  const double fm = u[(i + n - 1) % n], f0 = u[i], fp = u[(i + 1) % n];
  const double curv = fm - 2.0 * f0 + fp;
  double x = g.x(i);
  if (curv < 0.0) x += 0.5 * (fm - fp) / curv * g.dx();

  auto& sp = spectral(g);
  const auto uhat = sp.forward(u.values);
  for (int k = 0; k < 30; ++k) {
    const double d1 = sp.interpolate(uhat, x, 1);
    const double d2 = sp.interpolate(uhat, x, 2);
    if (!(d2 < 0.0)) break;
    const double step = std::clamp(d1 / d2, -g.dx(), g.dx());
    x -= step;
    if (std::abs(step) < 1e-15) break;
  }
  x = g.wrap(x);
  if (found_at) *found_at = x;
  return Field(g, sp.shift(u.values, -x));
}

namespace {

struct NewtonState {
  std::vector<double> w;
  double lambda = 0.0;
};

double bump_residual(Spectral& sp, const Potential& p, const NewtonState& s, double m, std::vector<double>& F) {
  const auto wxx = sp.derivative(s.w, 2);
  double res = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < s.w.size(); ++i) {
    F[i] = -wxx[i] + p.d1(s.w[i]) - s.lambda;
    res = std::max(res, std::abs(F[i]));
    mean += s.w[i];
  }
  mean /= static_cast<double>(s.w.size());
  return std::max(res, std::abs(mean - m));
}

void symmetrize(std::vector<double>& w) {
  const std::size_t n = w.size();
  for (std::size_t i = 1; i < n / 2; ++i) {
    const double a = 0.5 * (w[i] + w[n - i]);
    w[i] = w[n - i] = a;
  }
}

}  // namespace

BumpProfile solve_bump(const Grid& grid, const Potential& p, double m, const BumpOptions& opt) {
  const double L = grid.half_length();
  if (!(m >= -0.75 && m <= 0.75)) throw Error(ErrorCode::InvalidArgument, "bump mean must lie in [-3/4, 3/4]");
  if (L < opt.min_half_length) throw Error(ErrorCode::InvalidArgument, "bump needs L >= L_min");
  if (static_cast<double>(grid.size()) < 8.0 * grid.period() - 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "bump needs at least 8 points per unit length");
  }

  // Newton runs on a coarse grid (about 8 points per unit length) and the
  // result is spectrally interpolated; the profile is entire, so nothing is lost.
  const auto want = static_cast<std::size_t>(std::ceil(16.0 * L));
  const std::size_t nc = std::min(grid.size(), std::max<std::size_t>(64, std::bit_ceil(want)));
  const Grid cg(L, nc);
  auto& sp = spectral(cg);
  const int N = static_cast<int>(nc);

  const KinkProfile v = kink(p, 0.0);
  const double ell = L * (1.0 + m);
  NewtonState st;
  st.w.resize(nc);
  for (std::size_t i = 0; i < nc; ++i) {
    const double x = cg.x(i);
    st.w[i] = v.value(x + ell / 2) * -v.value(x - ell / 2);
  }
  symmetrize(st.w);
  st.lambda = 0.0;

  Eigen::MatrixXd D2(N, N);
  {
    std::vector<double> e(nc, 0.0);
    e[0] = 1.0;
    const auto c = sp.derivative(e, 2);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) D2(i, j) = c[static_cast<std::size_t>((i - j + N) % N)];
  }

  std::vector<double> F(nc);
  double res = bump_residual(sp, p, st, m, F);
  int iters = 0;
  bool converged = res <= opt.tolerance;
  while (!converged && iters < opt.max_iterations) {
    ++iters;
    const auto wx = sp.derivative(st.w, 1);
    double mean = 0.0;
    for (double x : st.w) mean += x;
    mean /= N;

    // Bordered system: the mean row fixes the breathing mode, the w_x row
    // the translation mode.
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N + 2, N + 2);
    A.topLeftCorner(N, N) = -D2;
    Eigen::VectorXd b(N + 2);
    for (int i = 0; i < N; ++i) {
      A(i, i) += p.d2(st.w[i]);
      A(i, N) = -1.0;
      A(i, N + 1) = wx[i];
      A(N, i) = 1.0 / N;
      A(N + 1, i) = wx[i];
      b(i) = -F[i];
    }
    b(N) = -(mean - m);
    b(N + 1) = 0.0;
    const Eigen::VectorXd delta = A.partialPivLu().solve(b);
    if (!delta.allFinite()) throw Error(ErrorCode::NewtonDiverged, "singular Newton system");

    double tau = 1.0;
    bool accepted = false;
    std::vector<double> Ft(nc);
    NewtonState trial;
    while (tau >= opt.damping_floor) {
      trial.w = st.w;
      for (int i = 0; i < N; ++i) trial.w[i] += tau * delta(i);
      trial.lambda = st.lambda + tau * delta(N);
      symmetrize(trial.w);
      const double rt = bump_residual(sp, p, trial, m, Ft);
      if (std::isfinite(rt) && rt < res) {
        accepted = true;
        res = rt;
        break;
      }
      tau *= 0.5;
    }
    if (!accepted) {
      // stagnation at roundoff counts as convergence
      if (res <= 1e-10) break;
      throw Error(ErrorCode::NewtonDiverged, "line search hit the damping floor, residual " + std::to_string(res));
    }
    st = std::move(trial);
    F.swap(Ft);
    converged = res <= opt.tolerance || tau * delta.head(N).lpNorm<Eigen::Infinity>() < 1e-15;
  }
  if (res > 1e-10) throw Error(ErrorCode::NewtonDiverged, "no convergence in " + std::to_string(iters) + " iterations");

  // zero-pad onto the target grid
  std::vector<double> fine;
  if (nc == grid.size()) {
    fine = st.w;
  } else {
    const auto ch = sp.forward(st.w);
    std::vector<Complex> fh(grid.modes(), Complex(0.0));
    const double scale = static_cast<double>(grid.size()) / static_cast<double>(nc);
    for (std::size_t j = 0; j < nc / 2; ++j) fh[j] = ch[j] * scale;
    fh[nc / 2] = 0.5 * ch[nc / 2] * scale;
    fine = spectral(grid).inverse(fh);
  }

  // Symmetrization keeps the maximum at x = 0 exactly. A numerical search
  // would be ill-conditioned here: the plateau is flat to exp(-sqrt2 L / 2).
  BumpProfile out{Field(grid, std::move(fine))};
  out.lagrange = st.lambda;
  out.newton_iterations = iters;
  out.mean = out.samples.mean();

  const auto wxx = spectral(grid).derivative(out.samples.values, 2);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.residual = std::max(out.residual, std::abs(-wxx[i] + p.d1(out.samples[i]) - out.lagrange));
  }

  const auto z = interpolant_zeros(out.samples);
  if (z.size() != 2) {
    throw Error(ErrorCode::WrongBranch, "converged state has " + std::to_string(z.size()) + " zeros");
  }
  out.zeros = {z[0], z[1]};
  const double gap = z[1] - z[0];
  if (gap < L / 16.0 || gap > 2.0 * L - L / 16.0) throw Error(ErrorCode::WrongBranch, "zeros too close");

  out.energy = energy(out.samples, p);
  out.energy_excess = out.energy - 2.0 * kink_energy(p);
  const double ae = std::abs(out.energy_excess);
  out.c0 = (ae > 0.0 && ae < 1.0) ? -L / std::log(ae) : 0.0;
  return out;
}

double GluedKinkProfile::Patch::eval(double x, int order) const {
  const double t = (x - x0) / h;
  double sum = 0.0;
  for (int k = 7; k >= order; --k) {
    double c = coeffs[static_cast<std::size_t>(k)];
    for (int j = 0; j < order; ++j) c *= k - j;
    sum = sum * t + c;
  }
  return sum / std::pow(h, order);
}

namespace {

std::array<double, 8> hermite7(double h, const std::array<double, 4>& left, const std::array<double, 4>& right) {
  Eigen::Matrix<double, 8, 8> A = Eigen::Matrix<double, 8, 8>::Zero();
  Eigen::Matrix<double, 8, 1> b;
  for (int r = 0; r < 4; ++r) {
    const double hr = std::pow(h, r);
    A(r, r) = factorial(r);
    b(r) = left[static_cast<std::size_t>(r)] * hr;
    for (int k = r; k < 8; ++k) A(4 + r, k) = static_cast<double>(factorial(k) / factorial(k - r));
    b(4 + r) = right[static_cast<std::size_t>(r)] * hr;
  }
  const Eigen::Matrix<double, 8, 1> c = A.fullPivLu().solve(b);
  std::array<double, 8> out{};
  for (int k = 0; k < 8; ++k) out[static_cast<std::size_t>(k)] = c(k);
  return out;
}

}  // namespace

GluedKinkProfile::GluedKinkProfile(const Potential& p, GluedParams params, double half_length, bool on_torus)
    : kink_(p, 0.0), params_(params), half_length_(half_length), on_torus_(on_torus) {
  const double q = params.q, a = params.alpha, b = params.beta, L = half_length;
  auto up = [&](double x) {
    return std::array<double, 4>{kink_.derivative(x - a, 0), kink_.derivative(x - a, 1),
                                 kink_.derivative(x - a, 2), kink_.derivative(x - a, 3)};
  };
  auto down = [&](double x) {
    return std::array<double, 4>{-kink_.derivative(x - b, 0), -kink_.derivative(x - b, 1),
                                 -kink_.derivative(x - b, 2), -kink_.derivative(x - b, 3)};
  };
  near_.x0 = q - 1.0;
  near_.coeffs = hermite7(near_.h, up(q - 1.0), down(q + 1.0));
  if (on_torus) {
    // the far junction joins -v_beta at q+L-1 to v_alpha at q-L+1 (= q+L+1 mod 2L)
    far_.x0 = q + L - 1.0;
    far_.coeffs = hermite7(far_.h, down(q + L - 1.0), up(q - L + 1.0));
  }

  namespace bq = boost::math::quadrature;
  auto h1 = [&](const Patch& patch, double target) {
    auto f = [&](double x) {
      const double d = patch.eval(x, 0) - target;
      const double dx = patch.eval(x, 1);
      return d * d + dx * dx;
    };
    return std::sqrt(bq::gauss<double, 30>::integrate(f, patch.x0, patch.x0 + patch.h));
  };
  h1_near_ = h1(near_, 1.0);
  if (on_torus) h1_far_ = h1(far_, -1.0);
  c0_ = (h1_near_ > 0.0 && h1_near_ < 1.0) ? -L / std::log(h1_near_) : 0.0;

  for (int r = 0; r < 4; ++r) {
    const auto ur = static_cast<std::size_t>(r);
    max_jump_ = std::max(max_jump_, std::abs(near_.eval(q - 1.0, r) - up(q - 1.0)[ur]));
    max_jump_ = std::max(max_jump_, std::abs(near_.eval(q + 1.0, r) - down(q + 1.0)[ur]));
    if (on_torus) {
      max_jump_ = std::max(max_jump_, std::abs(far_.eval(q + L - 1.0, r) - down(q + L - 1.0)[ur]));
      max_jump_ = std::max(max_jump_, std::abs(far_.eval(q + L + 1.0, r) - up(q - L + 1.0)[ur]));
    }
  }
}

double GluedKinkProfile::outer(double y, int order) const {
  if (y < params_.q) return kink_.derivative(y - params_.alpha, order);
  return -kink_.derivative(y - params_.beta, order);
}

double GluedKinkProfile::derivative(double x, int order) const {
  const double q = params_.q, L = half_length_;
  double y = x;
  if (on_torus_) {
    double r = std::fmod(x - q + L, 2.0 * L);
    if (r < 0.0) r += 2.0 * L;
    y = q + r - L;
  }
  if (std::abs(y - q) <= 1.0) return near_.eval(y, order);
  if (on_torus_) {
    if (y >= q + L - 1.0) return far_.eval(y, order);
    if (y <= q - L + 1.0) return far_.eval(y + 2.0 * L, order);
  }
  return outer(y, order);
}

Field GluedKinkProfile::sample(const Grid& g) const {
  // evaluate in the grid's periodic frame centered at q
  return Field::sample(g, [&](double x) { return value(params_.q + g.wrap(x - params_.q)); });
}

GluedKinkProfile glue_kinks(const Potential& p, double q, double alpha, double beta, double half_length,
                            bool on_torus) {
  const double L = half_length;
  if (!(L > 0.0)) throw Error(ErrorCode::InvalidArgument, "L must be positive");
  if (on_torus) {
    const double sep = std::max(L / 16.0, 1.0);
    const double d[4] = {q - alpha, alpha - (q - L), beta - q, q + L - beta};
    for (double v : d) {
      if (!(v >= sep)) throw Error(ErrorCode::SeparationViolated, "kink centers too close to a junction");
    }
  } else if (!(q - alpha >= L / 2.0) || !(beta - q >= L / 2.0)) {
    throw Error(ErrorCode::SeparationViolated, "kink centers closer than L/2 to q");
  }
  GluedKinkProfile w(p, {q, alpha, beta}, L, on_torus);
  const double bound = std::exp(-L / 64.0);
  if (w.h1_deviation_near() > bound || w.h1_deviation_far() > bound) {
    throw Error(ErrorCode::InterpolantBoundViolated,
                "H1 deviation " + std::to_string(std::max(w.h1_deviation_near(), w.h1_deviation_far())));
  }
  return w;
}

double SharpInterface::value(double x) const { return std::abs(x - shift) <= half_width ? 1.0 : -1.0; }

Field SharpInterface::sample(const Grid& g) const {
  return Field::sample(g, [&](double x) { return std::abs(g.wrap(x - shift)) <= half_width ? 1.0 : -1.0; });
}

}  // namespace chflow
