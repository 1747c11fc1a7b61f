#include "chflow/solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "chflow/error.hpp"

namespace chflow {

std::vector<double> SnapshotSchedule::times(double t_end) const {
  std::vector<double> v;
  if (log_start > 0.0 && per_decade > 0) {
    for (int k = 0;; ++k) {
      const double t = log_start * std::pow(10.0, static_cast<double>(k) / per_decade);
      if (t >= t_end) break;
      v.push_back(t);
    }
  }
  if (uniform_interval > 0.0) {
    for (int k = 1;; ++k) {
      const double t = k * uniform_interval;
      if (t >= t_end) break;
      v.push_back(t);
    }
  }
  for (double t : extra) {
    if (t > 0.0 && t < t_end) v.push_back(t);
  }
  v.push_back(t_end);
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double t : v) {
    if (out.empty() || t - out.back() > 1e-12 * std::max(1.0, t)) out.push_back(t);
  }
  return out;
}

void SolverConfig::validate(const Potential& p) const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (!(dt > 0.0)) bad("dt must be positive");
  if (!(t_end > 0.0)) bad("t_end must be positive");
  if (!(dt_min > 0.0) || !(dt_max >= dt_min)) bad("dt bounds inconsistent");
  if (!(tolerance > 0.0)) bad("tolerance must be positive");
  if (!adapt) {
    double gmax = 0.0;
    for (int i = 0; i <= 240; ++i) gmax = std::max(gmax, p.d2(-1.2 + 0.01 * i));
    if (stabilization < gmax) bad("stabilization below max G'' on [-1.2, 1.2]");
  }
}

namespace {

// Spectral state of one time level: the zero mode of uhat is never modified,
// so the mean is conserved to roundoff in the real-space samples only.
struct State {
  std::vector<Complex> uhat;
  std::vector<Complex> nhat;
  std::vector<double> u;
  double E = 0.0;
  double D = 0.0;
};

class Stepper {
 public:
  Stepper(const Grid& g, const SolverConfig& cfg, const Potential& p)
      : grid_(g), cfg_(cfg), p_(p), sp_(spectral(g)), k2_(g.modes()), keep_(g.modes()) {
    for (std::size_t j = 0; j < g.modes(); ++j) {
      const double k = g.wavenumber(j);
      k2_[j] = k * k;
      keep_[j] = !cfg.dealias || g.dealias_keep(j);
    }
    scratch_.resize(g.size());
  }

  State make(std::vector<Complex> uhat) {
    State s;
    s.uhat = std::move(uhat);
    s.u.resize(grid_.size());
    sp_.inverse(s.uhat, s.u);
    double pot = 0.0;
    for (std::size_t i = 0; i < s.u.size(); ++i) {
      if (!std::isfinite(s.u[i])) throw Error(ErrorCode::NonFinite, "non-finite value in the solution");
      scratch_[i] = p_.d1(s.u[i]);
      pot += p_.eval(s.u[i]);
    }
    s.nhat.resize(grid_.modes());
    sp_.forward(scratch_, s.nhat);

    const std::size_t n = grid_.size(), nyq = n / 2;
    double grad = 0.0, diss = 0.0;
    for (std::size_t j = 1; j <= nyq; ++j) {
      const double w = j == nyq ? 1.0 : 2.0;
      const Complex nl = keep_[j] ? s.nhat[j] : Complex(0.0);
      const Complex mu = -k2_[j] * s.uhat[j] - nl;
      grad += w * k2_[j] * std::norm(s.uhat[j]);
      if (j != nyq) diss += w * k2_[j] * std::norm(mu);
    }
    const double parseval = grid_.period() / (static_cast<double>(n) * static_cast<double>(n));
    s.E = 0.5 * grad * parseval + pot * grid_.dx();
    s.D = diss * parseval;
    return s;
  }

  State advance(const State& s, double dt) {
    const double S = cfg_.stabilization;
    std::vector<Complex> next(s.uhat.size());
    next[0] = s.uhat[0];
    for (std::size_t j = 1; j < next.size(); ++j) {
      const Complex nl = keep_[j] ? s.nhat[j] : Complex(0.0);
      next[j] = (s.uhat[j] - dt * k2_[j] * (nl - S * s.uhat[j])) / (1.0 + dt * (k2_[j] * k2_[j] + S * k2_[j]));
    }
    return make(std::move(next));
  }

  Spectral& spectral_ops() { return sp_; }

 private:
  Grid grid_;
  const SolverConfig& cfg_;
  const Potential& p_;
  Spectral& sp_;
  std::vector<double> k2_;
  std::vector<bool> keep_;
  std::vector<double> scratch_;
};

double sample_mean(const std::vector<double>& u) {
  double s = 0.0;
  for (double v : u) s += v;
  return s / static_cast<double>(u.size());
}

}  // namespace

Field step(const Field& u, const SolverConfig& cfg, const Potential& p) {
  if (!u.all_finite()) throw Error(ErrorCode::NonFinite, "non-finite input");
  Stepper st(u.grid, cfg, p);
  const State s0 = st.make(st.spectral_ops().forward(u.values));
  State s1 = st.advance(s0, cfg.dt);
  return Field(u.grid, std::move(s1.u));
}

std::size_t Trajectory::index_at(double t) const {
  const auto it = std::lower_bound(times.begin(), times.end(), t - 1e-12 * std::max(1.0, t));
  if (it == times.end()) return times.empty() ? 0 : times.size() - 1;
  return static_cast<std::size_t>(it - times.begin());
}

namespace {

template <class F>
double trapezoid_log(const std::vector<StepRecord>& steps, double t0, double t1, F f) {
  const double eps = 1e-12 * std::max(1.0, std::abs(t1));
  double sum = 0.0;
  for (std::size_t i = 1; i < steps.size(); ++i) {
    const auto& a = steps[i - 1];
    const auto& b = steps[i];
    if (a.t >= t0 - eps && b.t <= t1 + eps) sum += 0.5 * (b.t - a.t) * (f(a.D) + f(b.D));
  }
  return sum;
}

}  // namespace

double Trajectory::integrated_dissipation(double t0, double t1) const {
  return trapezoid_log(steps, t0, t1, [](double d) { return d; });
}

double Trajectory::integrated_sqrt_dissipation(double t0, double t1) const {
  return trapezoid_log(steps, t0, t1, [](double d) { return std::sqrt(std::max(d, 0.0)); });
}

Trajectory evolve(const Field& u0, const SolverConfig& cfg, const Potential& p, const SnapshotHook& hook,
                  bool keep_snapshots) {
  cfg.validate(p);
  if (!u0.all_finite()) throw Error(ErrorCode::NonFinite, "non-finite initial data");
  const Grid& g = u0.grid;
  Stepper st(g, cfg, p);
  Trajectory traj(g);
  const auto times = cfg.schedule.times(cfg.t_end);

  State s = st.make(st.spectral_ops().forward(u0.values));
  traj.initial_mean = sample_mean(s.u);
  auto record_snapshot = [&](double t) {
    Field f(g, s.u);
    if (hook) hook(t, f);
    traj.times.push_back(t);
    if (keep_snapshots) traj.snapshots.push_back(std::move(f));
  };
  record_snapshot(0.0);
  traj.steps.push_back({0.0, 0.0, s.E, s.D});

  double t = 0.0;
  double dt = std::min(cfg.dt, cfg.dt_max);
  std::size_t next = 0;
  while (next < times.size()) {
    const double target = times[next];
    const double remaining = target - t;
    const bool clipped = remaining <= dt;
    const double h = clipped ? remaining : dt;

    State candidate;
    if (!cfg.adapt) {
      candidate = st.advance(s, h);
    } else {
      State full = st.advance(s, h);
      State half = st.advance(st.advance(s, 0.5 * h), 0.5 * h);
      double err = 0.0;
      for (std::size_t i = 0; i < full.u.size(); ++i) err = std::max(err, std::abs(full.u[i] - half.u[i]));
      const bool ok_err = err <= cfg.tolerance;
      const bool ok_energy = half.E <= s.E + cfg.energy_slack;
      if (!(ok_err && ok_energy)) {
        ++traj.rejected;
        if (h <= cfg.dt_min * (1.0 + 1e-9)) {
          if (!ok_err) {
            throw Error(ErrorCode::StepFloorReached, "error " + std::to_string(err) + " at t = " + std::to_string(t));
          }
          throw Error(ErrorCode::EnergyIncreaseAtFloor, "energy increase at t = " + std::to_string(t));
        }
        dt = std::max(0.5 * h, cfg.dt_min);
        continue;
      }
      if (!clipped) {
        const double grow = err > 0.0 ? std::clamp(0.9 * std::sqrt(cfg.tolerance / err), 1.0, 2.0) : 2.0;
        dt = std::min(cfg.dt_max, dt * grow);
      }
      candidate = std::move(half);
    }

    traj.max_energy_increase = std::max(traj.max_energy_increase, candidate.E - s.E);
    s = std::move(candidate);
    t = clipped ? target : t + h;
    ++traj.accepted;
    traj.steps.push_back({t, h, s.E, s.D});
    traj.max_mean_drift = std::max(traj.max_mean_drift, std::abs(sample_mean(s.u) - traj.initial_mean));
    if (clipped) {
      record_snapshot(t);
      ++next;
    }
  }
  return traj;
}

BackwardTrajectory solve_backward(const BackwardConfig& cfg, const Field& psi, bool keep_fields) {
  if (!(cfg.g2 > 0.0)) throw Error(ErrorCode::InvalidArgument, "g2 must be positive");
  if (psi.linf() > 1.0 + 1e-14) throw Error(ErrorCode::InvalidArgument, "terminal data must satisfy |psi| <= 1");
  const Grid& g = psi.grid;
  auto& sp = spectral(g);
  const auto psihat = sp.forward(psi.values);
  BackwardTrajectory out;
  std::vector<Complex> work(g.modes());
  std::vector<double> real(g.size());
  for (double tau : cfg.taus) {
    if (tau < 0.0 || tau > cfg.horizon) throw Error(ErrorCode::InvalidArgument, "tau outside [0, T]");
    for (std::size_t j = 0; j < g.modes(); ++j) {
      const double k = g.wavenumber(j);
      work[j] = psihat[j] * std::exp(-tau * (k * k * k * k + cfg.g2 * k * k));
    }
    sp.inverse(work, real);
    out.wrap_deviation = std::max(out.wrap_deviation, std::abs(real[0] - psi[0]));
    if (keep_fields) out.zeta.emplace_back(g, real);
    for (std::size_t j = 0; j < g.modes(); ++j) {
      const double k = g.wavenumber(j);
      work[j] *= -k * k;
    }
    sp.inverse(work, real);
    double m = 0.0;
    for (double v : real) m = std::max(m, std::abs(v));
    out.taus.push_back(tau);
    out.zeta_xx_sup.push_back(m);
  }
  return out;
}

Field square_wave(const Grid& g) {
  const double h = 0.5 * g.half_length();
  return Field::sample(g, [h](double x) {
    const double a = std::abs(x);
    return a < h ? 1.0 : (a == h ? 0.0 : -1.0);
  });
}

}  // namespace chflow
