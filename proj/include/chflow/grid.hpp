#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace chflow {

using Complex = std::complex<double>;

/// Uniform periodic grid on [-L, L) with n points; n must be a power of two.
class Grid {
 public:
  Grid(double half_length, std::size_t n);

  double half_length() const noexcept { return half_length_; }
  double period() const noexcept { return 2.0 * half_length_; }
  std::size_t size() const noexcept { return n_; }
  std::size_t modes() const noexcept { return n_ / 2 + 1; }
  double dx() const noexcept { return period() / static_cast<double>(n_); }
  double x(std::size_t i) const noexcept { return -half_length_ + static_cast<double>(i) * dx(); }
  /// Angular wavenumber of r2c mode j, k_j = pi j / L.
  double wavenumber(std::size_t j) const noexcept;
  /// 2/3-rule mask: true when mode j survives dealiasing.
  bool dealias_keep(std::size_t j) const noexcept { return 3 * j <= n_; }
  /// Maps x onto [-L, L).
  double wrap(double x) const noexcept;
  /// Signed periodic difference a - b mapped into [-L, L).
  double periodic_diff(double a, double b) const noexcept { return wrap(a - b); }

  bool operator==(const Grid& other) const noexcept {
    return half_length_ == other.half_length_ && n_ == other.n_;
  }

 private:
  double half_length_;
  std::size_t n_;
};

/// Real samples of a function on a grid.
struct Field {
  Grid grid;
  std::vector<double> values;

  explicit Field(const Grid& g) : grid(g), values(g.size(), 0.0) {}
  Field(const Grid& g, std::vector<double> v);

  static Field constant(const Grid& g, double value);
  static Field sample(const Grid& g, const std::function<double(double)>& f);

  std::size_t size() const noexcept { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  /// Periodic trapezoid integral.
  double integral() const;
  double mean() const;
  double linf() const;
  bool all_finite() const;

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double s);
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);

/// FFTW-backed transforms for one grid. Owns its plans and scratch buffers;
/// one instance must not be used from two threads at once.
class Spectral {
 public:
  explicit Spectral(const Grid& g);
  ~Spectral();
  Spectral(const Spectral&) = delete;
  Spectral& operator=(const Spectral&) = delete;

  const Grid& grid() const noexcept { return grid_; }

  void forward(std::span<const double> in, std::span<Complex> out);
  /// Normalized inverse: inverse(forward(u)) == u.
  void inverse(std::span<const Complex> in, std::span<double> out);

  std::vector<Complex> forward(std::span<const double> in);
  std::vector<double> inverse(std::span<const Complex> in);

  /// d^order/dx^order of u (Nyquist mode dropped for odd orders).
  std::vector<double> derivative(std::span<const double> u, int order);
  /// Multiplies a spectrum in place by (ik)^order.
  void differentiate_spectrum(std::span<Complex> uhat, int order) const;

  /// Evaluates the trigonometric interpolant of uhat at an arbitrary x.
  double interpolate(std::span<const Complex> uhat, double x, int order = 0) const;
  /// Samples of u(. - s) using the spectral interpolant.
  std::vector<double> shift(std::span<const double> u, double s);

  /// integral |u|^2 over the period from a spectrum (Parseval).
  double l2_squared(std::span<const Complex> uhat) const;
  /// Weighted Parseval sum: integral over the period of |sum_k m_k uhat_k e^{ikx}|^2 for real m_k.
  double weighted_l2_squared(std::span<const Complex> uhat,
                             const std::function<double(double)>& multiplier) const;

 private:
  Grid grid_;
  double* real_buf_;
  Complex* spec_buf_;
  void* plan_forward_;
  void* plan_inverse_;
};

/// Per-thread cached transform object for a grid.
Spectral& spectral(const Grid& g);

/// Roots of the spectral interpolant of u, one per sign change of the grid
/// samples (periodic), refined to an interval width of tol. Sorted, in [-L, L).
std::vector<double> interpolant_zeros(const Field& u, double tol = 1e-12);

}  // namespace chflow
