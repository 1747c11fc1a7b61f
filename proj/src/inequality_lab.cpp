#include "chflow/inequality_lab.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

#include "chflow/error.hpp"
#include "chflow/manifold.hpp"

namespace chflow {

void InequalityReport::add(double time, double value) {
  t.push_back(time);
  ratio.push_back(value);
}

void InequalityReport::finish() {
  if (ratio.empty()) {
    worst = min = kNaN;
    pass = true;
    return;
  }
  worst = *std::max_element(ratio.begin(), ratio.end());
  min = *std::min_element(ratio.begin(), ratio.end());
  pass = worst <= cap && min >= lower_cap;
}

double InequalityReport::extra_value(const std::string& key) const {
  for (const auto& [k, v] : extra) {
    if (k == key) return v;
  }
  return kNaN;
}

namespace {

InequalityReport make_report(const std::string& name, const Scenario& s, double cap) {
  InequalityReport r;
  r.name = name;
  r.cap = cap;
  r.scenario = s.id;
  r.L = s.L;
  r.n = s.n;
  return r;
}

}  // namespace

InequalityReport check_nash(const DiagnosticsSeries& series, const Scenario& s, double cap, const Potential& p) {
  InequalityReport r = make_report("nash", s, cap);
  const double gate = 4.0 * kink_energy(p);
  r.extra.emplace_back("energy_gate", gate);
  const PhaseSignals sig = phase_signals(series, s.problem);
  for (std::size_t i = 0; i < sig.t.size(); ++i) {
    const auto& rec = series[i];
    const double gap = sig.gap[i], V = sig.V[i];
    if (!std::isfinite(gap) || !std::isfinite(V) || !std::isfinite(rec.D)) {
      ++r.excluded;
      continue;
    }
    if (gap > gate) {
      ++r.gated;
      continue;
    }
    const double denom = std::cbrt(std::max(rec.D, 0.0)) * std::pow(V + 1.0, 4.0 / 3.0);
    if (denom <= kRatioFloor || std::abs(gap) <= kRatioFloor) {
      ++r.excluded;
      continue;
    }
    r.add(rec.t, gap / denom);
  }
  r.finish();
  return r;
}

EedSample eed_sample(const Field& u, const BumpProfile& w, const Potential& p) {
  const auto pr = project_bump(u, w);
  const Field f = u - w.shifted(pr.handle.shift);
  EedSample e;
  e.shift = pr.handle.shift;
  e.gap = energy(u, p) - w.energy;
  e.h1 = h1_squared(f);
  e.h3 = h3_seminorm_squared(f);
  e.D = dissipation(u, p);
  return e;
}

EedReport check_eed(const DiagnosticsSeries& series, const Scenario& s, EedPhase phase, double cap) {
  const char* tag = phase == EedPhase::Bump ? "bump" : phase == EedPhase::Glued ? "glued" : "minus_one";
  EedReport out{make_report(std::string("eed_energy_") + tag, s, cap),
                make_report(std::string("eed_dissipation_") + tag, s, cap),
                make_report(std::string("eed_gap_by_dissipation_") + tag, s, 10.0)};
  out.energy.lower_cap = 1.0 / cap;
  out.dissipation.lower_cap = 0.0;
  const bool torus = s.problem == Problem::TorusBump;
  if (phase == EedPhase::Bump && !torus) {
    throw Error(ErrorCode::PhaseHypothesisUnmet, "bump phase needs a torus scenario");
  }
  const double slack = phase == EedPhase::Glued ? std::exp(-s.L / 64.0) : 0.0;
  out.energy.extra.emplace_back("slack", slack);

  std::string hypothesis;
  std::size_t admitted = 0;
  for (const auto& rec : series) {
    if (!rec.trusted) break;
    double gap = kNaN, h1 = kNaN, h3 = kNaN;
    bool ok = false;
    switch (phase) {
      case EedPhase::Bump:
        hypothesis = "gap <= eps/L";
        gap = rec.gap_bump;
        h1 = rec.h1_f;
        h3 = rec.h3_f;
        ok = gap <= s.phases.t2_eps / s.L;
        break;
      case EedPhase::Glued:
        hypothesis = "glued gap and sup |u - w~| below the T0 thresholds";
        gap = rec.gap_glued;
        h1 = rec.h1_ft;
        h3 = rec.h3_ft;
        ok = gap <= s.phases.t0_gap && rec.linf_f <= s.phases.t0_linf;
        break;
      case EedPhase::MinusOne:
        hypothesis = "sup |u + 1| below the T0 threshold";
        gap = rec.E;
        h1 = rec.h1_ft;
        h3 = rec.h3_ft;
        ok = s.problem == Problem::SubTwoEStar && rec.linf_f <= s.phases.t0_linf;
        break;
    }
    if (!ok) {
      ++out.energy.gated;
      ++out.dissipation.gated;
      ++out.gap_by_dissipation.gated;
      continue;
    }
    ++admitted;
    if (std::abs(gap) + slack > kRatioFloor && std::isfinite(h1)) {
      out.energy.add(rec.t, (h1 + slack) / (std::abs(gap) + slack));
    } else {
      ++out.energy.excluded;
    }
    if (rec.D > kRatioFloor && std::isfinite(h3)) {
      out.dissipation.add(rec.t, h3 / rec.D);
    } else {
      ++out.dissipation.excluded;
    }
    if (torus) {
      const double denom = s.L * s.L * rec.D + slack;
      if (denom > kRatioFloor && std::abs(gap) > kRatioFloor) {
        out.gap_by_dissipation.add(rec.t, gap / denom);
      } else {
        ++out.gap_by_dissipation.excluded;
      }
    }
  }
  if (admitted == 0) throw Error(ErrorCode::PhaseHypothesisUnmet, hypothesis);
  out.energy.finish();
  out.dissipation.finish();
  // two-sided comparability for the dissipation: only the upper direction is capped
  out.dissipation.pass = out.dissipation.ratio.empty() || out.dissipation.worst <= out.dissipation.cap;
  out.gap_by_dissipation.finish();
  return out;
}

InequalityReport check_ode_decay(const DiagnosticsSeries& series, const Scenario& s, double cap) {
  InequalityReport r = make_report("ode_decay", s, cap);
  const PhaseSignals sig = phase_signals(series, s.problem);
  bool any = false;
  for (double g : sig.gap) any = any || (std::isfinite(g) && std::abs(g) > kRatioFloor);
  if (!any) {
    r.excluded = sig.t.size();
    r.finish();
    return r;
  }
  const AlgebraicFit af = fit_algebraic(series, s);
  for (std::size_t i = 0; i < af.t.size(); ++i) r.add(af.t[i], af.ratio[i]);
  r.extra.emplace_back("slope", af.fit.exponent);
  r.extra.emplace_back("r2", af.fit.r2);
  r.extra.emplace_back("t_lo", af.fit.t_lo);
  r.extra.emplace_back("t_hi", af.fit.t_hi);
  r.extra.emplace_back("points", static_cast<double>(af.fit.points));
  r.finish();
  return r;
}

namespace {

double interpolate_linear(const std::vector<double>& t, const std::vector<double>& y, double at) {
  if (at <= t.front()) return y.front();
  const auto it = std::upper_bound(t.begin(), t.end(), at);
  if (it == t.end()) return y.back();
  const std::size_t j = static_cast<std::size_t>(it - t.begin());
  const double w = (at - t[j - 1]) / (t[j] - t[j - 1]);
  return (1.0 - w) * y[j - 1] + w * y[j];
}

}  // namespace

DissipationReport check_dissipation_bounds(const DiagnosticsSeries& series, const Scenario& s, double cap) {
  DissipationReport out{make_report("dissipation_by_energy", s, cap), make_report("dissipation_growth", s, cap),
                        make_report("integral_dissipation", s, cap)};
  const PhaseSignals sig = phase_signals(series, s.problem);
  const std::size_t n = sig.t.size();
  std::vector<double> D(n);
  for (std::size_t i = 0; i < n; ++i) D[i] = series[i].D;
  if (n == 0) {
    out.by_energy.finish();
    out.growth.finish();
    out.integral.finish();
    return out;
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!(sig.t[i] > 0.0)) {
      ++out.by_energy.excluded;
      continue;
    }
    const double g = interpolate_linear(sig.t, sig.gap, 0.5 * sig.t[i]);
    const double denom = std::max(g * g, g / sig.t[i]);
    if (!(std::abs(g) > kRatioFloor) || !(denom > kRatioFloor) || !std::isfinite(D[i])) {
      ++out.by_energy.excluded;
      continue;
    }
    out.by_energy.add(sig.t[i], D[i] / denom);
  }

  // centered differences, only where D increases monotonically through the stencil
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(D[i - 1] < D[i] && D[i] < D[i + 1])) {
      ++out.growth.gated;
      continue;
    }
    const double rate = (D[i + 1] - D[i - 1]) / (sig.t[i + 1] - sig.t[i - 1]);
    const double denom = std::pow(D[i], 1.5);
    if (!(denom > kRatioFloor)) {
      ++out.growth.excluded;
      continue;
    }
    out.growth.add(sig.t[i], rate / denom);
  }

  double integral = 0.0, VT = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      integral += 0.5 * (sig.t[i] - sig.t[i - 1]) *
                  (std::pow(std::max(D[i - 1], 0.0), 0.75) + std::pow(std::max(D[i], 0.0), 0.75));
    }
    if (std::isfinite(sig.V[i])) VT = std::max(VT, sig.V[i]);
    if (!(VT > kRatioFloor) || i == 0) {
      ++out.integral.excluded;
      continue;
    }
    out.integral.add(sig.t[i], integral / VT);
  }
  out.integral.extra.emplace_back("gamma", 0.75);

  out.by_energy.finish();
  out.growth.finish();
  out.integral.finish();
  return out;
}

double check_hardy(const Field& f, const KinkProfile& v, const HalfInterval& domain) {
  const Grid& g = f.grid;
  std::vector<double> w(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.x(i);
    if (x >= domain.lo && x <= domain.hi) w[i] = g.dx();
  }
  // trapezoid end weights; an infinite end is cut at the edge of the grid
  std::vector<double> ends(w);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (ends[i] == 0.0) continue;
    const bool left_end = i == 0 || ends[i - 1] == 0.0;
    const bool right_end = i + 1 == g.size() || ends[i + 1] == 0.0;
    if (left_end || right_end) w[i] *= 0.5;
  }
  std::vector<double> vx(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) vx[i] = v.derivative(g.x(i), 1);
  double fv = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    fv += w[i] * f[i] * vx[i];
    vv += w[i] * vx[i] * vx[i];
  }
  Field h = f;
  if (vv > 0.0) {
    for (std::size_t i = 0; i < g.size(); ++i) h[i] -= fv / vv * vx[i];
  }
  const auto hx = spectral(g).derivative(h.values, 1);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.x(i);
    num += w[i] * h[i] * h[i] / (x * x + 1.0);
    den += w[i] * hx[i] * hx[i];
  }
  if (den <= kRatioFloor) return num <= kRatioFloor ? kNaN : std::numeric_limits<double>::infinity();
  return num / den;
}

Eigen::MatrixXd linearization_matrix(const BumpProfile& w, const Potential& p) {
  const Grid& g = w.grid();
  const std::size_t n = g.size();
  auto& sp = spectral(g);
  Eigen::MatrixXd A(n, n);
  std::vector<double> e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    const auto col = sp.derivative(e, 2);
    for (std::size_t i = 0; i < n; ++i) A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = -col[i];
    e[j] = 0.0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    A(k, k) += p.d2(w.samples[i]);
  }
  return 0.5 * (A + A.transpose());
}

SpectrumReport check_linearization_spectrum(const BumpProfile& w, const Potential& p, std::uint64_t seed) {
  if (w.grid().half_length() < 16.0) throw Error(ErrorCode::InvalidArgument, "spectrum check needs L >= 16");
  const Eigen::MatrixXd A = linearization_matrix(w, p);
  const Eigen::Index n = A.rows();
  const Eigen::Index block = std::min<Eigen::Index>(12, n);
  const int wanted = 5;
  const double shift = -0.5;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(A - shift * Eigen::MatrixXd::Identity(n, n));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd X(n, block);
  for (Eigen::Index j = 0; j < block; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) X(i, j) = normal(rng);
  }

  SpectrumReport rep;
  const double scale = std::max(1.0, A.cwiseAbs().rowwise().sum().maxCoeff());
  Eigen::VectorXd theta;
  for (int it = 1; it <= 400; ++it) {
    const Eigen::MatrixXd Y = lu.solve(X);
    const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(Y).householderQ() *
                              Eigen::MatrixXd::Identity(n, block);
    const Eigen::MatrixXd H = Q.transpose() * A * Q;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(0.5 * (H + H.transpose()));
    theta = small.eigenvalues();
    X = Q * small.eigenvectors();
    double res = 0.0;
    for (int k = 0; k < wanted; ++k) {
      res = std::max(res, (A * X.col(k) - theta(k) * X.col(k)).norm());
    }
    rep.iterations = it;
    rep.max_residual = res;
    if (res <= 1e-10 * scale) break;
  }
  if (!(rep.max_residual <= 1e-10 * scale)) {
    throw Error(ErrorCode::EigsNotConverged, "residual " + std::to_string(rep.max_residual));
  }

  for (int k = 0; k < wanted; ++k) rep.eigenvalues.push_back(theta(k));
  // Translation and breathing are the two near-zero modes. Their splitting
  // drops below roundoff for large L, so the translation vector is taken as
  // the projection of w_x onto the cluster and breathing as its complement.
  const auto wx = spectral(w.grid()).derivative(w.samples.values, 1);
  const Eigen::Map<const Eigen::VectorXd> wxv(wx.data(), n);
  const Eigen::MatrixXd C = X.leftCols(2);
  const Eigen::Vector2d coef = C.transpose() * wxv;
  const Eigen::VectorXd e1 = (C * coef).normalized();
  const Eigen::VectorXd e2 = (C * Eigen::Vector2d(-coef(1), coef(0))).normalized();
  rep.lambda1 = e1.dot(A * e1);
  rep.overlap = std::abs(e1.dot(wxv)) / wxv.norm();
  rep.lambda2 = e2.dot(A * e2);
  rep.lambda3 = theta(2);
  return rep;
}

}  // namespace chflow
