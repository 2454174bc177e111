#pragma once

// Periodic n x n grid on the unit flat torus [0,1)^2 (|M| = 1, K = 0) and
// pseudo-spectral operations on scalar fields living on it.

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace mfdeg::torus {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<double, 4>;  // row-major {xx, xy, yx, yy}

/// Wrap into [0,1)^2.
Point wrap(Point p);
/// Minimum-image displacement a - b, components in [-1/2, 1/2).
Vec2 min_image(Point a, Point b);
/// Minimum-image distance on the torus.
double distance(Point a, Point b);

class TorusGrid {
 public:
  /// n must be a power of two and at least 8.
  explicit TorusGrid(int n);

  int n() const { return n_; }
  std::size_t size() const { return static_cast<std::size_t>(n_) * n_; }
  double spacing() const { return 1.0 / n_; }
  double cell_area() const { return spacing() * spacing(); }
  /// Node (ix, iy) sits at (ix/n, iy/n); storage index iy*n + ix.
  Point node(int ix, int iy) const { return {ix * spacing(), iy * spacing()}; }
  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * n_ + ix;
  }
  bool operator==(const TorusGrid& o) const { return n_ == o.n_; }

 private:
  int n_;
};

class TorusField {
 public:
  explicit TorusField(TorusGrid grid, double fill = 0.0);
  TorusField(TorusGrid grid, std::vector<double> values);

  /// Samples f at every grid node.
  static TorusField sample(TorusGrid grid,
                           const std::function<double(Point)>& f);

  const TorusGrid& grid() const { return grid_; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator()(int ix, int iy) { return values_[grid_.index(ix, iy)]; }
  double operator()(int ix, int iy) const {
    return values_[grid_.index(ix, iy)];
  }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  double mean() const;
  double max() const;
  double min() const;
  double norm_inf() const;
  /// sqrt(integral of f^2).
  double norm_l2() const;
  /// |mean| <= 1e-12.
  bool is_mean_zero() const;
  bool all_finite() const;
  /// Subtracts the mean in place; returns *this.
  TorusField& project_mean_zero();

  TorusField& operator+=(const TorusField& o);
  TorusField& operator-=(const TorusField& o);
  TorusField& operator*=(double s);
  TorusField operator+(const TorusField& o) const;
  TorusField operator-(const TorusField& o) const;
  TorusField operator*(double s) const;
  TorusField operator-() const;

  /// Pointwise map.
  TorusField map(const std::function<double(double)>& f) const;

 private:
  TorusGrid grid_;
  std::vector<double> values_;
};

/// Pointwise product.
TorusField hadamard(const TorusField& a, const TorusField& b);
/// Integral over the torus (mean value times |M| = 1).
double integrate(const TorusField& f);
/// Integral of a*b.
double inner(const TorusField& a, const TorusField& b);

/// Spectral Laplacian: multiplier -4 pi^2 |k|^2.
TorusField laplacian(const TorusField& f);
/// Inverse Laplacian on mean-zero fields; throws InputError if
/// |mean(g)| > 1e-10.
TorusField poisson_solve(const TorusField& g);
/// Spectral first derivatives (Nyquist mode dropped).
std::array<TorusField, 2> gradient(const TorusField& f);
/// Spectral second derivatives {xx, xy, yy}.
std::array<TorusField, 3> hessian(const TorusField& f);
/// Zeroes every mode with max(|kx|, |ky|) > n/3.
TorusField dealias_two_thirds(const TorusField& f);
/// Integral of |grad f|^2, spectrally.
double dirichlet_energy(const TorusField& f);

/// Trigonometric interpolant of a grid field, evaluable anywhere.
class SpectralInterpolant {
 public:
  explicit SpectralInterpolant(const TorusField& f);
  double value(Point p) const;
  Vec2 gradient(Point p) const;
  Mat2 hessian(Point p) const;

 private:
  // Evaluates sum c_k (i2pi k)^alpha e^{2 pi i k.p} for derivative orders
  // (ax, ay).
  double eval(Point p, int ax, int ay) const;
  int n_;
  std::vector<std::complex<double>> coeffs_;  // full n x n, ordered [ky][kx]
};

/// Green function G(., p) with -Lap G = delta_p - 1, integral zero.
struct GreenData {
  Point pole;
  TorusField field;
  double regular_self = 0.0;  // R(p, p)
};

/// Band-limited spectral Green function. The Dirac mass is the truncated
/// Fourier series over the grid's modes (half weight on Nyquist modes), and
/// R(p,p) is extracted from the mollified pole value with Richardson
/// extrapolation over n and n/2.
GreenData green(Point pole, const TorusGrid& grid);

/// Mollified pole value minus the log-singularity offset for an n-grid;
/// converges to R(p,p) at O(n^-2). Exposed for extrapolation tests.
double pole_offset_estimate(int n);

// Serialization. CSV is row-major with one y-row per line. The binary
// format is an 8-byte header (uint32 n little-endian, 4 reserved zero
// bytes) followed by n*n little-endian float64 values in storage order.
void write_csv(const TorusField& f, std::ostream& os);
TorusField read_csv(std::istream& is);
void write_binary(const TorusField& f, std::ostream& os);
TorusField read_binary(std::istream& is);
void save_binary(const TorusField& f, const std::string& path);
TorusField load_binary(const std::string& path);

}  // namespace mfdeg::torus
