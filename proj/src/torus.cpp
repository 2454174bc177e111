#include "mfdeg/torus.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>

#include "mfdeg/errors.hpp"

namespace mfdeg::torus {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

Point wrap(Point p) {
  p.x -= std::floor(p.x);
  p.y -= std::floor(p.y);
  if (p.x >= 1.0) p.x = 0.0;
  if (p.y >= 1.0) p.y = 0.0;
  return p;
}

Vec2 min_image(Point a, Point b) {
  auto fold = [](double d) { return d - std::floor(d + 0.5); };
  return {fold(a.x - b.x), fold(a.y - b.y)};
}

double distance(Point a, Point b) {
  const Vec2 d = min_image(a, b);
  return std::hypot(d[0], d[1]);
}

TorusGrid::TorusGrid(int n) : n_(n) {
  if (n < 8 || (n & (n - 1)) != 0)
    throw InputError("grid size must be a power of two >= 8, got " +
                     std::to_string(n));
}

// ---------------------------------------------------------------------------
// FFTW plumbing

namespace {

template <typename T>
class FftwBuffer {
 public:
  explicit FftwBuffer(std::size_t count)
      : ptr_(static_cast<T*>(fftw_malloc(sizeof(T) * count))), count_(count) {
    if (!ptr_) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(ptr_); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  T* data() { return ptr_; }
  std::size_t size() const { return count_; }

 private:
  T* ptr_;
  std::size_t count_;
};

struct Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
  fftw_plan c2c_backward = nullptr;
};

const Plans& plans_for(int n) {
  static std::mutex mutex;
  static std::map<int, Plans> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  const std::size_t nc = static_cast<std::size_t>(n) * (n / 2 + 1);
  FftwBuffer<double> real(static_cast<std::size_t>(n) * n);
  FftwBuffer<fftw_complex> freq(nc);
  FftwBuffer<fftw_complex> full(static_cast<std::size_t>(n) * n);
  Plans p;
  p.r2c = fftw_plan_dft_r2c_2d(n, n, real.data(), freq.data(), FFTW_ESTIMATE);
  p.c2r = fftw_plan_dft_c2r_2d(n, n, freq.data(), real.data(), FFTW_ESTIMATE);
  p.c2c_backward = fftw_plan_dft_2d(n, n, full.data(), full.data(),
                                    FFTW_BACKWARD, FFTW_ESTIMATE);
  return cache.emplace(n, p).first->second;
}

int signed_mode(int j, int n) { return j <= n / 2 ? j : j - n; }

// Half-spectrum coefficients [ky][kx], kx in [0, n/2], normalised by 1/n^2.
struct HalfSpectrum {
  int n;
  std::vector<cplx> c;
  cplx& at(int kx, int iy) { return c[static_cast<std::size_t>(iy) * (n / 2 + 1) + kx]; }
  cplx at(int kx, int iy) const {
    return c[static_cast<std::size_t>(iy) * (n / 2 + 1) + kx];
  }
};

HalfSpectrum forward(const TorusField& f) {
  const int n = f.grid().n();
  const auto& plans = plans_for(n);
  FftwBuffer<double> in(f.grid().size());
  FftwBuffer<fftw_complex> out(static_cast<std::size_t>(n) * (n / 2 + 1));
  std::copy(f.values().begin(), f.values().end(), in.data());
  fftw_execute_dft_r2c(plans.r2c, in.data(), out.data());
  HalfSpectrum s{n, std::vector<cplx>(out.size())};
  const double scale = 1.0 / (static_cast<double>(n) * n);
  for (std::size_t i = 0; i < out.size(); ++i)
    s.c[i] = cplx(out.data()[i][0], out.data()[i][1]) * scale;
  return s;
}

TorusField backward(const TorusGrid& grid, const HalfSpectrum& s) {
  const int n = grid.n();
  const auto& plans = plans_for(n);
  FftwBuffer<fftw_complex> in(s.c.size());
  FftwBuffer<double> out(grid.size());
  for (std::size_t i = 0; i < s.c.size(); ++i) {
    in.data()[i][0] = s.c[i].real();
    in.data()[i][1] = s.c[i].imag();
  }
  fftw_execute_dft_c2r(plans.c2r, in.data(), out.data());
  return TorusField(grid, std::vector<double>(out.data(), out.data() + grid.size()));
}

// Applies multiplier m(kx, ky, nyquist_x, nyquist_y) to the half spectrum.
template <typename Mult>
TorusField apply_multiplier(const TorusField& f, Mult m) {
  HalfSpectrum s = forward(f);
  const int n = f.grid().n();
  for (int iy = 0; iy < n; ++iy) {
    const int ky = signed_mode(iy, n);
    for (int kx = 0; kx <= n / 2; ++kx)
      s.at(kx, iy) *= m(kx, ky, kx == n / 2, iy == n / 2);
  }
  return backward(f.grid(), s);
}

}  // namespace

// ---------------------------------------------------------------------------
// TorusField

TorusField::TorusField(TorusGrid grid, double fill)
    : grid_(grid), values_(grid.size(), fill) {}

TorusField::TorusField(TorusGrid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    throw InputError("field value count does not match grid");
}

TorusField TorusField::sample(TorusGrid grid,
                              const std::function<double(Point)>& f) {
  TorusField out(grid);
  for (int iy = 0; iy < grid.n(); ++iy)
    for (int ix = 0; ix < grid.n(); ++ix) out(ix, iy) = f(grid.node(ix, iy));
  return out;
}

double TorusField::mean() const {
  // pairwise-ish accumulation keeps the mean-zero checks tight
  long double acc = 0.0L;
  for (double v : values_) acc += v;
  return static_cast<double>(acc / static_cast<long double>(values_.size()));
}

double TorusField::max() const {
  return *std::max_element(values_.begin(), values_.end());
}
double TorusField::min() const {
  return *std::min_element(values_.begin(), values_.end());
}

double TorusField::norm_inf() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double TorusField::norm_l2() const {
  long double acc = 0.0L;
  for (double v : values_) acc += static_cast<long double>(v) * v;
  return std::sqrt(static_cast<double>(acc) * grid_.cell_area());
}

bool TorusField::is_mean_zero() const { return std::abs(mean()) <= 1e-12; }

bool TorusField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

TorusField& TorusField::project_mean_zero() {
  const double m = mean();
  for (double& v : values_) v -= m;
  return *this;
}

TorusField& TorusField::operator+=(const TorusField& o) {
  if (!(grid_ == o.grid_)) throw InputError("grid mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}

TorusField& TorusField::operator-=(const TorusField& o) {
  if (!(grid_ == o.grid_)) throw InputError("grid mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
  return *this;
}

TorusField& TorusField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

TorusField TorusField::operator+(const TorusField& o) const {
  TorusField r = *this;
  return r += o;
}
TorusField TorusField::operator-(const TorusField& o) const {
  TorusField r = *this;
  return r -= o;
}
TorusField TorusField::operator*(double s) const {
  TorusField r = *this;
  return r *= s;
}
TorusField TorusField::operator-() const { return *this * -1.0; }

TorusField TorusField::map(const std::function<double(double)>& f) const {
  TorusField r = *this;
  for (double& v : r.values_) v = f(v);
  return r;
}

TorusField hadamard(const TorusField& a, const TorusField& b) {
  if (!(a.grid() == b.grid())) throw InputError("grid mismatch");
  TorusField r = a;
  for (std::size_t i = 0; i < r.grid().size(); ++i) r[i] *= b[i];
  return r;
}

double integrate(const TorusField& f) { return f.mean(); }

double inner(const TorusField& a, const TorusField& b) {
  if (!(a.grid() == b.grid())) throw InputError("grid mismatch");
  long double acc = 0.0L;
  for (std::size_t i = 0; i < a.grid().size(); ++i)
    acc += static_cast<long double>(a[i]) * b[i];
  return static_cast<double>(acc) * a.grid().cell_area();
}

// ---------------------------------------------------------------------------
// Spectral operators

TorusField laplacian(const TorusField& f) {
  return apply_multiplier(f, [](int kx, int ky, bool, bool) {
    return cplx(-4.0 * kPi * kPi * (kx * kx + ky * ky), 0.0);
  });
}

TorusField poisson_solve(const TorusField& g) {
  if (std::abs(g.mean()) > 1e-10)
    throw InputError("poisson_solve requires a mean-zero right-hand side");
  TorusField u = apply_multiplier(g, [](int kx, int ky, bool, bool) {
    const int k2 = kx * kx + ky * ky;
    return k2 == 0 ? cplx(0.0) : cplx(-1.0 / (4.0 * kPi * kPi * k2), 0.0);
  });
  return u.project_mean_zero();
}

std::array<TorusField, 2> gradient(const TorusField& f) {
  auto dx = apply_multiplier(f, [](int kx, int, bool nx, bool) {
    return nx ? cplx(0.0) : cplx(0.0, 2.0 * kPi * kx);
  });
  auto dy = apply_multiplier(f, [](int, int ky, bool, bool ny) {
    return ny ? cplx(0.0) : cplx(0.0, 2.0 * kPi * ky);
  });
  return {std::move(dx), std::move(dy)};
}

std::array<TorusField, 3> hessian(const TorusField& f) {
  const double c = -4.0 * kPi * kPi;
  auto xx = apply_multiplier(
      f, [c](int kx, int, bool, bool) { return cplx(c * kx * kx, 0.0); });
  auto xy = apply_multiplier(f, [c](int kx, int ky, bool nx, bool ny) {
    return (nx || ny) ? cplx(0.0) : cplx(c * kx * ky, 0.0);
  });
  auto yy = apply_multiplier(
      f, [c](int, int ky, bool, bool) { return cplx(c * ky * ky, 0.0); });
  return {std::move(xx), std::move(xy), std::move(yy)};
}

TorusField dealias_two_thirds(const TorusField& f) {
  const int cut = f.grid().n() / 3;
  return apply_multiplier(f, [cut](int kx, int ky, bool, bool) {
    return (std::abs(kx) > cut || std::abs(ky) > cut) ? cplx(0.0) : cplx(1.0);
  });
}

double dirichlet_energy(const TorusField& f) {
  const HalfSpectrum s = forward(f);
  const int n = f.grid().n();
  double acc = 0.0;
  for (int iy = 0; iy < n; ++iy) {
    const int ky = signed_mode(iy, n);
    for (int kx = 0; kx <= n / 2; ++kx) {
      // interior half-plane columns stand for two conjugate modes
      const double mult = (kx == 0 || kx == n / 2) ? 1.0 : 2.0;
      acc += mult * 4.0 * kPi * kPi * (kx * kx + ky * ky) * std::norm(s.at(kx, iy));
    }
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Interpolation

SpectralInterpolant::SpectralInterpolant(const TorusField& f)
    : n_(f.grid().n()), coeffs_(static_cast<std::size_t>(n_) * n_) {
  const HalfSpectrum s = forward(f);
  const int n = n_;
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      cplx c;
      if (ix <= n / 2) {
        c = s.at(ix, iy);
      } else {
        const int jy = (n - iy) % n;
        c = std::conj(s.at(n - ix, jy));
      }
      coeffs_[static_cast<std::size_t>(iy) * n + ix] = c;
    }
  }
}

double SpectralInterpolant::eval(Point p, int ax, int ay) const {
  const int n = n_;
  // per-axis mode lists; Nyquist index splits into +-n/2 at half weight
  auto axis_factor = [n](int j, double coord, int order) {
    auto term = [&](int k) {
      cplx d = std::pow(cplx(0.0, 2.0 * kPi * k), order);
      return d * std::polar(1.0, 2.0 * kPi * k * coord);
    };
    if (j == n / 2) return 0.5 * (term(n / 2) + term(-n / 2));
    return term(signed_mode(j, n));
  };
  std::vector<cplx> fx(n), fy(n);
  for (int j = 0; j < n; ++j) {
    fx[j] = axis_factor(j, p.x, ax);
    fy[j] = axis_factor(j, p.y, ay);
  }
  cplx acc = 0.0;
  for (int iy = 0; iy < n; ++iy) {
    cplx row = 0.0;
    const cplx* c = &coeffs_[static_cast<std::size_t>(iy) * n];
    for (int ix = 0; ix < n; ++ix) row += c[ix] * fx[ix];
    acc += row * fy[iy];
  }
  return acc.real();
}

double SpectralInterpolant::value(Point p) const { return eval(p, 0, 0); }

Vec2 SpectralInterpolant::gradient(Point p) const {
  return {eval(p, 1, 0), eval(p, 0, 1)};
}

Mat2 SpectralInterpolant::hessian(Point p) const {
  const double xy = eval(p, 1, 1);
  return {eval(p, 2, 0), xy, xy, eval(p, 0, 2)};
}

// ---------------------------------------------------------------------------
// Green function

namespace {

// Constant c with  integral log|z| D(z) dz = c  for the kernel D whose
// Fourier transform is the indicator of the unit box |xi_i| <= 1/2.
double box_log_moment() {
  constexpr double catalan = 0.915965594177219015054603514932384110774;
  constexpr double euler_gamma = 0.577215664901532860606512090082402431042;
  return 2.0 * catalan / kPi - euler_gamma - std::log(kPi);
}

}  // namespace

double pole_offset_estimate(int n) {
  // trapezoid-weighted box sum of 1/(4 pi^2 |k|^2) is G_n at its own pole
  const int h = n / 2;
  long double acc = 0.0L;
  for (int ky = -h; ky <= h; ++ky) {
    const double wy = (std::abs(ky) == h) ? 0.5 : 1.0;
    for (int kx = -h; kx <= h; ++kx) {
      if (kx == 0 && ky == 0) continue;
      const double wx = (std::abs(kx) == h) ? 0.5 : 1.0;
      acc += wx * wy / (4.0 * kPi * kPi * (kx * kx + ky * ky));
    }
  }
  return static_cast<double>(acc) + (box_log_moment() - std::log(n)) / (2.0 * kPi);
}

GreenData green(Point pole, const TorusGrid& grid) {
  const int n = grid.n();
  const auto& plans = plans_for(n);
  pole = wrap(pole);
  FftwBuffer<fftw_complex> buf(grid.size());

  auto modes = [n](int j) {
    std::vector<std::pair<int, double>> m;
    if (j == n / 2) {
      m = {{n / 2, 0.5}, {-n / 2, 0.5}};
    } else {
      m = {{signed_mode(j, n), 1.0}};
    }
    return m;
  };
  for (int iy = 0; iy < n; ++iy) {
    const auto my = modes(iy);
    for (int ix = 0; ix < n; ++ix) {
      const auto mx = modes(ix);
      cplx c = 0.0;
      for (auto [ky, wy] : my)
        for (auto [kx, wx] : mx) {
          const int k2 = kx * kx + ky * ky;
          if (k2 == 0) continue;
          c += wx * wy * std::polar(1.0, -2.0 * kPi * (kx * pole.x + ky * pole.y)) /
               (4.0 * kPi * kPi * k2);
        }
      const std::size_t i = static_cast<std::size_t>(iy) * n + ix;
      buf.data()[i][0] = c.real();
      buf.data()[i][1] = c.imag();
    }
  }
  fftw_execute_dft(plans.c2c_backward, buf.data(), buf.data());
  TorusField g(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) g[i] = buf.data()[i][0];
  g.project_mean_zero();

  GreenData out{pole, std::move(g), 0.0};
  const double fine = pole_offset_estimate(n);
  const double coarse = pole_offset_estimate(n / 2);
  out.regular_self = (4.0 * fine - coarse) / 3.0;
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

void write_csv(const TorusField& f, std::ostream& os) {
  const int n = f.grid().n();
  char buf[32];
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      std::snprintf(buf, sizeof buf, "%.17g", f(ix, iy));
      os << buf << (ix + 1 < n ? "," : "\n");
    }
  }
}

TorusField read_csv(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw InputError("bad CSV cell: " + cell);
      }
    }
    rows.push_back(std::move(row));
  }
  const int n = static_cast<int>(rows.size());
  TorusGrid grid(n);
  TorusField f(grid);
  for (int iy = 0; iy < n; ++iy) {
    if (static_cast<int>(rows[iy].size()) != n)
      throw InputError("CSV field is not square");
    for (int ix = 0; ix < n; ++ix) f(ix, iy) = rows[iy][ix];
  }
  return f;
}

namespace {

template <typename T>
T to_little_endian(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    std::reverse(b, b + sizeof(T));
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
}

}  // namespace

void write_binary(const TorusField& f, std::ostream& os) {
  const std::uint32_t n = to_little_endian(static_cast<std::uint32_t>(f.grid().n()));
  const std::uint32_t reserved = 0;
  os.write(reinterpret_cast<const char*>(&n), 4);
  os.write(reinterpret_cast<const char*>(&reserved), 4);
  for (double v : f.values()) {
    const double le = to_little_endian(v);
    os.write(reinterpret_cast<const char*>(&le), 8);
  }
}

TorusField read_binary(std::istream& is) {
  std::uint32_t n = 0, reserved = 0;
  is.read(reinterpret_cast<char*>(&n), 4);
  is.read(reinterpret_cast<char*>(&reserved), 4);
  if (!is) throw InputError("truncated field header");
  n = to_little_endian(n);
  TorusGrid grid(static_cast<int>(n));
  TorusField f(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double v = 0.0;
    is.read(reinterpret_cast<char*>(&v), 8);
    f[i] = to_little_endian(v);
  }
  if (!is) throw InputError("truncated field data");
  return f;
}

void save_binary(const TorusField& f, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot open " + path);
  write_binary(f, os);
}

TorusField load_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path);
  return read_binary(is);
}

}  // namespace mfdeg::torus
