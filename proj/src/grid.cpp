#include "chflow/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <utility>

#include <boost/math/tools/roots.hpp>

#include "chflow/error.hpp"

namespace chflow {

namespace {

// FFTW's planner is not thread-safe; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

Grid::Grid(double half_length, std::size_t n) : half_length_(half_length), n_(n) {
  if (!(half_length > 0.0) || !std::isfinite(half_length)) {
    throw Error(ErrorCode::InvalidArgument, "grid half-length must be positive");
  }
  if (n < 8 || !std::has_single_bit(n)) {
    throw Error(ErrorCode::InvalidArgument, "grid size must be a power of two >= 8");
  }
}

double Grid::wavenumber(std::size_t j) const noexcept {
  return std::numbers::pi * static_cast<double>(j) / half_length_;
}

double Grid::wrap(double x) const noexcept {
  const double p = period();
  double y = std::fmod(x + half_length_, p);
  if (y < 0.0) y += p;
  if (y >= p) y -= p;
  return y - half_length_;
}

Field::Field(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
  if (values.size() != grid.size()) {
    throw Error(ErrorCode::InvalidArgument, "field size does not match grid");
  }
}

Field Field::constant(const Grid& g, double value) {
  return Field(g, std::vector<double>(g.size(), value));
}

Field Field::sample(const Grid& g, const std::function<double(double)>& f) {
  Field out(g);
  for (std::size_t i = 0; i < g.size(); ++i) out.values[i] = f(g.x(i));
  return out;
}

double Field::integral() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * grid.dx();
}

double Field::mean() const { return integral() / grid.period(); }

double Field::linf() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

bool Field::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

Field& Field::operator+=(const Field& other) {
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += other.values[i];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  for (std::size_t i = 0; i < values.size(); ++i) values[i] -= other.values[i];
  return *this;
}

Field& Field::operator*=(double s) {
  for (double& v : values) v *= s;
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

Spectral::Spectral(const Grid& g) : grid_(g) {
  const auto n = static_cast<int>(g.size());
  real_buf_ = fftw_alloc_real(g.size());
  spec_buf_ = reinterpret_cast<Complex*>(fftw_alloc_complex(g.modes()));
  std::lock_guard lock(planner_mutex());
  plan_forward_ = fftw_plan_dft_r2c_1d(n, real_buf_, as_fftw(spec_buf_), FFTW_ESTIMATE);
  plan_inverse_ = fftw_plan_dft_c2r_1d(n, as_fftw(spec_buf_), real_buf_, FFTW_ESTIMATE);
}

Spectral::~Spectral() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_forward_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_inverse_));
  fftw_free(real_buf_);
  fftw_free(spec_buf_);
}

void Spectral::forward(std::span<const double> in, std::span<Complex> out) {
  std::copy(in.begin(), in.end(), real_buf_);
  fftw_execute(static_cast<fftw_plan>(plan_forward_));
  std::copy(spec_buf_, spec_buf_ + grid_.modes(), out.begin());
}

void Spectral::inverse(std::span<const Complex> in, std::span<double> out) {
  std::copy(in.begin(), in.end(), spec_buf_);
  fftw_execute(static_cast<fftw_plan>(plan_inverse_));
  const double scale = 1.0 / static_cast<double>(grid_.size());
  for (std::size_t i = 0; i < grid_.size(); ++i) out[i] = real_buf_[i] * scale;
}

std::vector<Complex> Spectral::forward(std::span<const double> in) {
  std::vector<Complex> out(grid_.modes());
  forward(in, out);
  return out;
}

std::vector<double> Spectral::inverse(std::span<const Complex> in) {
  std::vector<double> out(grid_.size());
  inverse(in, out);
  return out;
}

void Spectral::differentiate_spectrum(std::span<Complex> uhat, int order) const {
  if (order == 0) return;
  const std::size_t nyq = grid_.size() / 2;
  for (std::size_t j = 0; j < uhat.size(); ++j) {
    const double k = grid_.wavenumber(j);
    Complex factor(1.0, 0.0);
    const Complex ik(0.0, k);
    for (int p = 0; p < order; ++p) factor *= ik;
    uhat[j] *= factor;
  }
  if (order % 2 != 0) uhat[nyq] = 0.0;
}

std::vector<double> Spectral::derivative(std::span<const double> u, int order) {
  auto uhat = forward(u);
  differentiate_spectrum(uhat, order);
  return inverse(uhat);
}

double Spectral::interpolate(std::span<const Complex> uhat, double x, int order) const {
  const std::size_t n = grid_.size();
  const std::size_t nyq = n / 2;
  const double theta = grid_.wrap(x) + grid_.half_length();
  double sum = order == 0 ? uhat[0].real() : 0.0;
  const Complex ik_unit(0.0, 1.0);
  for (std::size_t j = 1; j < nyq; ++j) {
    const double k = grid_.wavenumber(j);
    Complex term = uhat[j] * std::polar(1.0, k * theta);
    for (int p = 0; p < order; ++p) term *= ik_unit * k;
    sum += 2.0 * term.real();
  }
  if (order % 2 == 0) {
    const double k = grid_.wavenumber(nyq);
    const double sign = (order / 2) % 2 == 0 ? 1.0 : -1.0;
    sum += sign * std::pow(k, order) * uhat[nyq].real() * std::cos(k * theta);
  }
  return sum / static_cast<double>(n);
}

std::vector<double> Spectral::shift(std::span<const double> u, double s) {
  auto uhat = forward(u);
  const std::size_t nyq = grid_.size() / 2;
  for (std::size_t j = 0; j < nyq; ++j) uhat[j] *= std::polar(1.0, -grid_.wavenumber(j) * s);
  uhat[nyq] *= std::cos(grid_.wavenumber(nyq) * s);
  return inverse(uhat);
}

double Spectral::l2_squared(std::span<const Complex> uhat) const {
  return weighted_l2_squared(uhat, [](double) { return 1.0; });
}

double Spectral::weighted_l2_squared(std::span<const Complex> uhat,
                                     const std::function<double(double)>& multiplier) const {
  const std::size_t n = grid_.size();
  const std::size_t nyq = n / 2;
  double sum = 0.0;
  for (std::size_t j = 0; j <= nyq; ++j) {
    const double m = multiplier(grid_.wavenumber(j));
    const double w = (j == 0 || j == nyq) ? 1.0 : 2.0;
    sum += w * m * m * std::norm(uhat[j]);
  }
  return sum * grid_.period() / (static_cast<double>(n) * static_cast<double>(n));
}

Spectral& spectral(const Grid& g) {
  thread_local std::map<std::pair<double, std::size_t>, std::unique_ptr<Spectral>> cache;
  auto key = std::make_pair(g.half_length(), g.size());
  auto it = cache.find(key);
  if (it == cache.end()) {
    it = cache.emplace(key, std::make_unique<Spectral>(g)).first;
  }
  return *it->second;
}

std::vector<double> interpolant_zeros(const Field& u, double tol) {
  const Grid& g = u.grid;
  const std::size_t n = g.size();
  auto& sp = spectral(g);
  const auto uhat = sp.forward(u.values);
  auto f = [&](double x) { return sp.interpolate(uhat, x); };

  std::vector<double> roots;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    const bool si = u[i] >= 0.0;
    const bool sj = u[j] >= 0.0;
    if (si == sj) continue;
    const double a = g.x(i);
    const double b = a + g.dx();
    double fa = u[i];
    double fb = u[j];
    if (fb == 0.0) {
      roots.push_back(g.wrap(b));
      continue;
    }
    // interpolant and samples agree at nodes up to roundoff
    fa = f(a);
    fb = f(b);
    double root;
    if (fa * fb > 0.0) {
      root = std::abs(fa) < std::abs(fb) ? a : b;
    } else {
      std::uintmax_t iters = 200;
      auto stop = [tol](double lo, double hi) { return std::abs(hi - lo) <= tol; };
      auto br = boost::math::tools::toms748_solve(f, a, b, fa, fb, stop, iters);
      root = 0.5 * (br.first + br.second);
    }
    roots.push_back(g.wrap(root));
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace chflow
