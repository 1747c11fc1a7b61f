#include "chflow/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numbers>
#include <random>
#include <string>
#include <thread>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "chflow/error.hpp"
#include "chflow/manifold.hpp"

namespace chflow {

const char* to_string(Problem p) noexcept {
  switch (p) {
    case Problem::TorusBump: return "torus";
    case Problem::LineBump: return "line";
    case Problem::SubTwoEStar: return "sub2e";
  }
  return "?";
}

Problem parse_problem(const std::string& name) {
  if (name == "torus") return Problem::TorusBump;
  if (name == "line") return Problem::LineBump;
  if (name == "sub2e") return Problem::SubTwoEStar;
  throw Error(ErrorCode::InvalidArgument, "unknown problem '" + name + "'");
}

double disturbance_shape(double s) {
  const double r = 1.0 - s * s;
  return r > 0.0 ? std::exp(1.0 - 1.0 / r) : 0.0;
}

double disturbance_shape_integral() {
  static const double value = [] {
    boost::math::quadrature::tanh_sinh<double> q;
    return q.integrate([](double s) { return disturbance_shape(s); }, -1.0, 1.0);
  }();
  return value;
}

double Scenario::domain_half_length() const {
  return problem == Problem::TorusBump ? L : 0.5 * domain_factor * L;
}

Grid Scenario::grid() const { return Grid(domain_half_length(), n); }

double line_family_length(double L) { return 0.8 * L; }

ScenarioProfiles build_profiles(const Scenario& s, const Potential& p) {
  ScenarioProfiles out;
  out.e_star = kink_energy(p);
  const Grid g = s.grid();
  if (s.problem == Problem::TorusBump) {
    out.bump = solve_bump(g, p, s.mean);
  } else if (s.problem == Problem::LineBump) {
    if (!(s.domain_factor >= 2.0)) throw Error(ErrorCode::InvalidArgument, "domain factor below 2");
    out.glued.emplace(glue_kinks(p, 0.0, -0.5 * s.L, 0.5 * s.L, line_family_length(s.L), false));
    out.glued_energy = energy(out.glued->sample(g), p);
  }
  return out;
}

namespace {

Field bump_at(const Grid& g, double center, double half_width) {
  return Field::sample(g, [&](double x) { return disturbance_shape(g.wrap(x - center) / half_width); });
}

// Zero-mean band-limited noise with sup norm `amplitude`.
Field seeded_noise(const Grid& g, double amplitude, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const std::size_t modes = std::min<std::size_t>(16, g.size() / 4);
  std::vector<double> a(modes), ph(modes);
  for (std::size_t j = 0; j < modes; ++j) {
    a[j] = normal(rng) / static_cast<double>(j + 1);
    ph[j] = phase(rng);
  }
  Field f = Field::sample(g, [&](double x) {
    double v = 0.0;
    for (std::size_t j = 0; j < modes; ++j) v += a[j] * std::cos(g.wavenumber(j + 1) * x + ph[j]);
    return v;
  });
  const double m = f.linf();
  if (m > 0.0) f *= amplitude / m;
  return f;
}

}  // namespace

InitialData build_initial(const Scenario& s, const ScenarioProfiles& prof, const Potential& p) {
  const Grid g = s.grid();
  const double H = g.half_length();
  const Disturbance& d = s.disturbance;

  Field ref(g);
  std::vector<double> interfaces;
  switch (s.problem) {
    case Problem::TorusBump: {
      ref = prof.bump->samples;
      interfaces = {prof.bump->zeros.first, prof.bump->zeros.second};
      break;
    }
    case Problem::LineBump: {
      ref = prof.glued->sample(g);
      interfaces = {prof.glued->params().alpha, prof.glued->params().beta};
      break;
    }
    case Problem::SubTwoEStar: ref = Field::constant(g, -1.0); break;
  }

  const double carried = s.problem == Problem::SubTwoEStar ? s.mass : d.mass;
  const double center = g.wrap(d.offset);
  if (carried != 0.0) {
    if (!(d.half_width > 0.0)) throw Error(ErrorCode::InvalidArgument, "disturbance width must be positive");
    for (double z : interfaces) {
      if (std::abs(g.periodic_diff(center, z)) < d.half_width + 4.0) {
        throw Error(ErrorCode::InvalidArgument, "disturbance support within 4 of an interface");
      }
    }
    if (s.problem != Problem::TorusBump && H - std::abs(center) < d.half_width + 4.0) {
      throw Error(ErrorCode::InvalidArgument, "disturbance support within 4 of the domain end");
    }
  }

  InitialData out{ref, ref};
  Field& u = out.u0;
  if (carried != 0.0) {
    const Field shape = bump_at(g, center, d.half_width);
    // discrete mass so the constraint holds on the grid, not only in the continuum
    out.amplitude = carried / shape.integral();
    u += out.amplitude * shape;
  }
  if (s.noise > 0.0) u += seeded_noise(g, s.noise, s.seed);

  // compensated sums: the line constraint is an integral of size 2L
  auto constraint = [&](const Field& f) {
    const double shift = s.problem == Problem::TorusBump ? 0.0 : 1.0;
    double sum = 0.0, comp = 0.0;
    for (double v : f.values) {
      const double y = (v + shift) - comp;
      const double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
    }
    if (s.problem == Problem::TorusBump) return sum / static_cast<double>(f.size()) - s.mean;
    return sum * g.dx() - (s.problem == Problem::LineBump ? 2.0 * s.L : s.mass);
  };
  const double tol = 1e-13;
  double err = constraint(u);
  for (int iter = 0; iter < 4 && std::abs(err) > tol; ++iter) {
    if (s.problem == Problem::SubTwoEStar) {
      // the noise is mean free, so only roundoff can land here
      u += Field::constant(g, -err / (2.0 * H));
    } else {
      Field corr(g, spectral(g).derivative(ref.values, 1));
      for (double& v : corr.values) v = std::abs(v);
      const double weight = s.problem == Problem::TorusBump ? corr.mean() : corr.integral();
      if (!(weight > 1e-12)) throw Error(ErrorCode::ConstraintCorrectionFailed, "corrector has no mass");
      out.corrector_amplitude -= err / weight;
      u += (-err / weight) * corr;
    }
    err = constraint(u);
  }
  if (std::abs(err) > tol) {
    throw Error(ErrorCode::ConstraintCorrectionFailed, "residual constraint error " + std::to_string(err));
  }
  out.constraint_error = err;

  out.energy = energy(u, p);
  const double budget = (s.problem == Problem::SubTwoEStar ? 2.0 : 4.0) * prof.e_star - s.epsilon;
  if (out.energy > budget) {
    throw Error(ErrorCode::EnergyBudgetExceeded,
                "E(u0) = " + std::to_string(out.energy) + " > " + std::to_string(budget));
  }
  out.W0_measured = excess_mass(u, ref);
  try {
    out.H0 = hminus1_norm(u - ref);
  } catch (const Error&) {
    out.H0 = kNaN;
  }
  return out;
}

namespace {

double nearest(const std::vector<double>& zeros, double target, const Grid& g) {
  double best = kNaN, dist = std::numeric_limits<double>::infinity();
  for (double z : zeros) {
    const double d = std::abs(g.periodic_diff(z, target));
    if (d < dist) {
      dist = d;
      best = z;
    }
  }
  return best;
}

void glued_diagnostics(DiagnosticsRecord& rec, const Field& u, const Potential& p, const GluedOptions& opt) {
  try {
    const auto pr = project_glued(u, p, opt);
    const Field wt = pr.glued->sample(u.grid);
    const Field f = u - wt;
    rec.gap_glued = rec.E - energy(wt, p);
    rec.V_tilde = excess_mass(u, wt);
    rec.linf_f = f.linf();
    rec.h1_ft = h1_squared(f);
    rec.h3_ft = h3_seminorm_squared(f);
    rec.glued_q = pr.handle.glued.q;
    rec.glued_alpha = pr.handle.glued.alpha;
    rec.glued_beta = pr.handle.glued.beta;
  } catch (const Error&) {
    // off the two-parameter family: leave the glued fields NaN
  }
}

bool tail_trusted(const Scenario& s, const Field& u) {
  if (s.problem == Problem::TorusBump) return true;
  return std::abs(u[0] + 1.0) <= s.sentinel;
}

}  // namespace

DiagnosticsRecord diagnose(const Scenario& s, const ScenarioProfiles& prof, const Potential& p, double t,
                           const Field& u) {
  DiagnosticsRecord rec;
  rec.t = t;
  rec.E = energy(u, p);
  rec.D = dissipation(u, p, s.solver.dealias);
  if (!tail_trusted(s, u)) {
    rec.trusted = false;
    return rec;
  }
  rec.xi_sup = discrepancy_sup(u, p);
  rec.zeros = interpolant_zeros(u);
  const Grid& g = u.grid;

  switch (s.problem) {
    case Problem::TorusBump: {
      const BumpProfile& w = *prof.bump;
      try {
        const auto pr = project_bump(u, w);
        const double c = pr.handle.shift;
        const Field f = u - w.shifted(c);
        rec.shift_c = c;
        rec.gap_bump = rec.E - w.energy;
        rec.V = excess_mass(u, w.shifted(c));
        rec.h1_f = h1_squared(f);
        rec.h3_f = h3_seminorm_squared(f);
        rec.zero_a = nearest(rec.zeros, g.wrap(w.zeros.first + c), g);
        rec.zero_b = nearest(rec.zeros, g.wrap(w.zeros.second + c), g);
      } catch (const Error&) {
      }
      glued_diagnostics(rec, u, p, {s.L, true});
      break;
    }
    case Problem::LineBump: {
      glued_diagnostics(rec, u, p, {line_family_length(s.L), false});
      if (std::isfinite(rec.glued_alpha)) {
        rec.zero_a = nearest(rec.zeros, rec.glued_alpha, g);
        rec.zero_b = nearest(rec.zeros, rec.glued_beta, g);
      }
      break;
    }
    case Problem::SubTwoEStar: {
      Field f = u;
      for (double& v : f.values) v += 1.0;
      rec.V_minus = excess_mass_minus_one(u);
      rec.linf_f = f.linf();
      rec.h1_ft = h1_squared(f);
      rec.h3_ft = h3_seminorm_squared(f);
      break;
    }
  }
  return rec;
}

RunResult run(const Scenario& s, const Potential& p, bool keep_snapshots) {
  const auto start = std::chrono::steady_clock::now();
  const ScenarioProfiles prof = build_profiles(s, p);
  InitialData init = build_initial(s, prof, p);
  DiagnosticsSeries series;
  bool trusted = true;
  auto hook = [&](double t, const Field& u) {
    if (!trusted) {
      DiagnosticsRecord rec;
      rec.t = t;
      rec.E = energy(u, p);
      rec.D = dissipation(u, p, s.solver.dealias);
      rec.trusted = false;
      series.push_back(std::move(rec));
      return;
    }
    series.push_back(diagnose(s, prof, p, t, u));
    trusted = series.back().trusted;
  };
  Trajectory traj = evolve(init.u0, s.solver, p, hook, keep_snapshots);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return RunResult{s, std::move(traj), std::move(series), std::move(init), secs};
}

unsigned sweep_threads(std::size_t jobs) {
  unsigned cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CHFLOW_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) cap = static_cast<unsigned>(v);
  }
  return static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(cap, jobs)));
}

std::vector<RunResult> run_sweep(const std::vector<Scenario>& scenarios, const Potential& p, bool keep_snapshots) {
  std::vector<std::optional<RunResult>> slots(scenarios.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::size_t first_index = scenarios.size();
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= scenarios.size()) return;
      try {
        slots[i].emplace(run(scenarios[i], p, keep_snapshots));
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (i < first_index) {
          first_index = i;
          first_error = std::current_exception();
        }
      }
    }
  };
  const unsigned nthreads = sweep_threads(scenarios.size());
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < nthreads; ++k) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);
  std::vector<RunResult> out;
  out.reserve(slots.size());
  for (auto& r : slots) out.push_back(std::move(*r));
  return out;
}

namespace {

struct LineFit {
  double slope = 0.0, intercept = 0.0, r2 = 1.0, sse = 0.0, max_residual = 0.0;
};

LineFit least_squares(const double* x, const double* y, std::size_t n) {
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    f.sse += r * r;
    f.max_residual = std::max(f.max_residual, std::abs(r));
  }
  f.r2 = syy > 0.0 ? 1.0 - f.sse / syy : 1.0;
  return f;
}

}  // namespace

FitResult fit_rate(const std::vector<double>& t, const std::vector<double>& y, double t_lo, double t_hi,
                   FitModel model) {
  if (t.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "t and y differ in length");
  const double slack = 1e-12 * std::max(1.0, std::abs(t_hi));
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_lo - slack || t[i] > t_hi + slack) continue;
    if (!(y[i] > 0.0) || !std::isfinite(y[i])) {
      throw Error(ErrorCode::InsufficientData, "non-positive value at t = " + std::to_string(t[i]));
    }
    if (model == FitModel::PowerLaw && !(t[i] > 0.0)) {
      throw Error(ErrorCode::InsufficientData, "power law needs t > 0");
    }
    xs.push_back(model == FitModel::PowerLaw ? std::log(t[i]) : t[i]);
    ys.push_back(std::log(y[i]));
  }
  if (xs.size() < 10) throw Error(ErrorCode::InsufficientData, std::to_string(xs.size()) + " points in window");
  const LineFit f = least_squares(xs.data(), ys.data(), xs.size());
  FitResult r;
  r.model = model;
  r.exponent = model == FitModel::PowerLaw ? f.slope : -f.slope;
  r.prefactor = std::exp(f.intercept);
  r.r2 = f.r2;
  r.points = xs.size();
  r.t_lo = t_lo;
  r.t_hi = t_hi;
  return r;
}

std::pair<std::size_t, std::size_t> algebraic_window(const std::vector<double>& t, const std::vector<double>& y) {
  // Admissible: at least one decade and 10 points, fitted slope below -0.1,
  // and every centered local slope within 0.15 of the fitted slope. The
  // longest admissible window wins; ties go to the smaller slope spread.
  std::vector<std::size_t> idx;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] > 0.0 && y[i] > 0.0 && std::isfinite(y[i])) {
      idx.push_back(i);
      lx.push_back(std::log10(t[i]));
      ly.push_back(std::log10(y[i]));
    }
  }
  const std::size_t n = lx.size();
  if (n < 10) throw Error(ErrorCode::WindowTooShort, "fewer than 10 positive samples");
  std::vector<double> local(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i == 0 ? 0 : i - 1;
    const std::size_t b = i + 1 == n ? n - 1 : i + 1;
    local[i] = (ly[b] - ly[a]) / (lx[b] - lx[a]);
  }
  double best_span = 0.0, best_spread = 0.0;
  std::size_t bi = 0, bj = 0;
  bool found = false;
  for (std::size_t i = 0; i < n; ++i) {
    double lo = local[i], hi = local[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      lo = std::min(lo, local[j]);
      hi = std::max(hi, local[j]);
      if (hi - lo > 0.3) break;
      const double span = lx[j] - lx[i];
      if (j < i + 9 || span < 1.0 || (found && span < best_span)) continue;
      const LineFit f = least_squares(&lx[i], &ly[i], j - i + 1);
      if (f.slope >= -0.1) continue;
      const double spread = std::max(hi - f.slope, f.slope - lo);
      if (spread > 0.15) continue;
      if (!found || span > best_span || spread < best_spread) {
        found = true;
        best_span = span;
        best_spread = spread;
        bi = i;
        bj = j;
      }
    }
  }
  if (!found) throw Error(ErrorCode::WindowTooShort, "no power-law window spanning a decade");
  return {idx[bi], idx[bj]};
}

PhaseSignals phase_signals(const DiagnosticsSeries& series, Problem problem) {
  PhaseSignals s;
  for (const auto& r : series) {
    if (!r.trusted) break;
    s.t.push_back(r.t);
    switch (problem) {
      case Problem::TorusBump:
        s.gap.push_back(r.gap_bump);
        s.gap_glued.push_back(r.gap_glued);
        s.V.push_back(r.V);
        break;
      case Problem::LineBump:
        s.gap.push_back(r.gap_glued);
        s.gap_glued.push_back(r.gap_glued);
        s.V.push_back(r.V_tilde);
        break;
      case Problem::SubTwoEStar:
        s.gap.push_back(r.E);
        s.gap_glued.push_back(r.E);
        s.V.push_back(r.V_minus);
        break;
    }
    s.linf.push_back(r.linf_f);
  }
  return s;
}

namespace {

// Index of the power-law/exponential changepoint on [lo, hi], with the
// changepoint restricted to indices <= kmax.
std::size_t changepoint(const std::vector<double>& t, const std::vector<double>& y, std::size_t lo, std::size_t hi,
                        std::size_t kmax) {
  std::vector<double> lt, et, ly;
  for (std::size_t i = lo; i <= hi; ++i) {
    lt.push_back(std::log(t[i]));
    et.push_back(t[i]);
    ly.push_back(std::log(y[i]));
  }
  const std::size_t m = lt.size();
  double best = std::numeric_limits<double>::infinity();
  std::size_t arg = lo;
  for (std::size_t k = 3; k + 3 < m && lo + k <= kmax; ++k) {
    const double sse = least_squares(lt.data(), ly.data(), k + 1).sse +
                       least_squares(et.data() + k, ly.data() + k, m - k).sse;
    if (sse < best) {
      best = sse;
      arg = lo + k;
    }
  }
  return arg;
}

}  // namespace

std::size_t bump_phase_index(const PhaseSignals& sig, const Scenario& s, std::size_t from) {
  if (s.problem != Problem::TorusBump) return sig.t.size();
  for (std::size_t i = from; i < sig.t.size(); ++i) {
    if (sig.gap[i] <= s.phases.t2_eps / s.L) return i;
  }
  return sig.t.size();
}

std::size_t t0_index(const PhaseSignals& sig, const PhaseThresholds& th) {
  for (std::size_t i = 0; i < sig.t.size(); ++i) {
    if (sig.gap_glued[i] <= th.t0_gap && sig.linf[i] <= th.t0_linf) return i;
  }
  return sig.t.size();
}

AlgebraicFit fit_algebraic(const DiagnosticsSeries& series, const Scenario& s) {
  const PhaseSignals sig = phase_signals(series, s.problem);
  const std::size_t n = sig.t.size();
  if (n == 0) throw Error(ErrorCode::WindowTooShort, "no trusted snapshots");
  const std::size_t i0 = t0_index(sig, s.phases);
  const std::size_t i2 = bump_phase_index(sig, s, i0 < n ? i0 : 0);
  // the window rule itself skips the initial transient, so the search starts at t = 0
  std::vector<double> tt, yy;
  for (std::size_t i = 0; i < n && (i2 == n || i <= i2); ++i) {
    if (!(sig.gap[i] >= s.phases.fit_floor)) break;
    tt.push_back(sig.t[i]);
    yy.push_back(sig.gap[i]);
  }
  const auto [a, b] = algebraic_window(tt, yy);
  AlgebraicFit out;
  out.fit = fit_rate(tt, yy, tt[a], tt[b], FitModel::PowerLaw);
  out.first = a;
  out.last = b;
  double VT = 0.0;
  out.constant = 0.0;
  for (std::size_t i = 0; i < n && sig.t[i] <= tt[b]; ++i) {
    if (std::isfinite(sig.V[i])) VT = std::max(VT, sig.V[i]);
    if (sig.t[i] >= tt[a] && VT > 1e-14) {
      const double r = sig.gap[i] * std::sqrt(sig.t[i]) / (VT * VT);
      out.t.push_back(sig.t[i]);
      out.ratio.push_back(r);
      out.constant = std::max(out.constant, r);
    }
  }
  return out;
}

PhaseReport detect_phases(const DiagnosticsSeries& series, const Scenario& s, const Potential& p) {
  PhaseReport rep;
  rep.thresholds = s.phases;
  const PhaseThresholds& th = s.phases;
  const PhaseSignals sig = phase_signals(series, s.problem);
  const std::size_t n = sig.t.size();
  if (n == 0) {
    rep.notes.push_back("no trusted snapshots");
    return rep;
  }
  rep.trusted_until = sig.t.back();
  if (series.size() < 100) rep.notes.push_back("fewer than 100 snapshots");
  rep.W0_measured = sig.V.front();
  rep.V_sup = 0.0;
  for (double v : sig.V) {
    if (std::isfinite(v)) rep.V_sup = std::max(rep.V_sup, v);
  }

  std::size_t i0 = t0_index(sig, th);
  if (i0 < n) {
    rep.T0 = sig.t[i0];
  } else {
    rep.not_reached.push_back("T0");
    i0 = 0;
  }

  const bool torus = s.problem == Problem::TorusBump;
  const std::size_t i2 = bump_phase_index(sig, s, i0);
  if (torus) {
    if (i2 < n) {
      rep.T2 = sig.t[i2];
    } else {
      rep.not_reached.push_back("T2");
    }
  }

  // last index before the gap reaches the fit floor
  std::size_t last = i0;
  for (std::size_t i = i0; i < n; ++i) {
    if (!(sig.gap[i] >= th.fit_floor)) break;
    last = i;
  }

  try {
    const AlgebraicFit af = fit_algebraic(series, s);
    rep.algebraic = af.fit;
    rep.algebraic_constant = af.constant;
  } catch (const Error& e) {
    rep.notes.push_back(std::string("algebraic window: ") + e.what());
  }

  if (torus) {
    std::size_t lo = i0;
    while (lo < n && !(sig.t[lo] > 0.0)) ++lo;
    if (lo + 7 <= last) {
      const std::size_t k = changepoint(sig.t, sig.gap, lo, last, i2 < n ? i2 : last);
      rep.T1 = sig.t[k];
    } else {
      rep.not_reached.push_back("T1");
    }
    if (i2 < n) {
      try {
        rep.exponential = fit_rate(sig.t, sig.gap, sig.t[i2], sig.t[std::max(last, i2)], FitModel::Exponential);
      } catch (const Error& e) {
        rep.notes.push_back(std::string("exponential fit: ") + e.what());
      }
    }

    std::vector<double> c(n), al(n), be(n);
    for (std::size_t i = 0; i < n; ++i) {
      c[i] = series[i].shift_c;
      al[i] = series[i].glued_alpha;
      be[i] = series[i].glued_beta;
    }
    const ShiftSeries sh = track_positions(sig.t, c, al, be, 2.0 * s.L);
    rep.delta_c = sh.delta_c.back();
    rep.delta_x = sh.delta_x.back();
    if (i2 < n) {
      const double c_end = sh.c.back();
      std::vector<double> tt, yy;
      for (std::size_t i = i2; i + 1 < n; ++i) {
        const double d = std::abs(sh.c[i] - c_end);
        if (!(d >= 1e-9)) break;
        tt.push_back(sig.t[i]);
        yy.push_back(d);
      }
      try {
        if (tt.empty()) throw Error(ErrorCode::InsufficientData, "no shift tail");
        rep.shift_tail = fit_rate(tt, yy, tt.front(), tt.back(), FitModel::Exponential);
      } catch (const Error& e) {
        rep.notes.push_back(std::string("shift tail: ") + e.what());
      }
    }
  }

  if (s.problem == Problem::LineBump) {
    const double two_e = 2.0 * kink_energy(p);
    double best_len = -1.0;
    for (std::size_t i = i0; i < n;) {
      if (!(std::abs(series[i].E - two_e) <= 0.05)) {
        ++i;
        continue;
      }
      std::size_t j = i;
      double dev = 0.0;
      while (j < n && std::abs(series[j].E - two_e) <= 0.05) {
        dev = std::max(dev, std::abs(series[j].E - two_e));
        ++j;
      }
      const double len = sig.t[j - 1] - sig.t[i];
      if (len > best_len) {
        best_len = len;
        rep.plateau_start = sig.t[i];
        rep.plateau_end = sig.t[j - 1];
        rep.plateau_max_deviation = dev;
      }
      i = j;
    }
  }
  return rep;
}

}  // namespace chflow
