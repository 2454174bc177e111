#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "mfdeg/errors.hpp"
#include "mfdeg/lattice_green.hpp"
#include "mfdeg/torus.hpp"

using namespace mfdeg::torus;
using std::numbers::pi;

namespace {

TorusField random_band_limited(TorusGrid g, int kmax, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<std::array<double, 4>> modes;
  for (int kx = -kmax; kx <= kmax; ++kx)
    for (int ky = -kmax; ky <= kmax; ++ky)
      if (kx != 0 || ky != 0) modes.push_back({double(kx), double(ky), nd(rng), nd(rng)});
  return TorusField::sample(g, [&](Point p) {
    double s = 0;
    for (auto& m : modes) {
      const double ph = 2 * pi * (m[0] * p.x + m[1] * p.y);
      s += m[2] * std::cos(ph) + m[3] * std::sin(ph);
    }
    return s;
  });
}

// direct Fourier sum of G, truncated with a Gaussian taper
double green_fourier(Vec2 d, int K) {
  double s = 0;
  for (int kx = -K; kx <= K; ++kx)
    for (int ky = -K; ky <= K; ++ky) {
      if (!kx && !ky) continue;
      const double k2 = kx * kx + ky * ky;
      s += std::cos(2 * pi * (kx * d[0] + ky * d[1])) / (4 * pi * pi * k2);
    }
  return s;
}

}  // namespace

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(TorusGrid(4), mfdeg::InputError);
  CHECK_THROWS_AS(TorusGrid(24), mfdeg::InputError);
  TorusGrid g(16);
  CHECK(g.size() == 256);
  CHECK(g.cell_area() * g.size() == doctest::Approx(1.0));
}

TEST_CASE("laplacian examples") {
  TorusGrid g(32);
  auto f = TorusField::sample(g, [](Point p) { return std::cos(2 * pi * p.x); });
  auto lf = laplacian(f);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(lf[i] == doctest::Approx(-4 * pi * pi * f[i]).epsilon(1e-12));
  CHECK(laplacian(TorusField(g, 3.0)).norm_inf() < 1e-10);
  auto h = TorusField::sample(g, [](Point p) { return std::cos(2 * pi * p.x) * std::cos(4 * pi * p.y); });
  CHECK((laplacian(h) - h * (-20 * pi * pi)).norm_inf() < 1e-9);
}

TEST_CASE("poisson_solve inverts laplacian") {
  TorusGrid g(32);
  auto rhs = TorusField::sample(g, [](Point p) { return -4 * pi * pi * std::cos(2 * pi * p.x); });
  auto u = poisson_solve(rhs);
  CHECK(u.is_mean_zero());
  for (std::size_t i = 0; i < g.size(); ++i)
    CHECK(u[i] == doctest::Approx(std::cos(2 * pi * g.node(i % 32, i / 32).x)).epsilon(1e-12));
  CHECK(poisson_solve(TorusField(g)).norm_inf() == 0.0);

  auto r = random_band_limited(g, 6, 7);
  r.project_mean_zero();
  CHECK((laplacian(poisson_solve(r)) - r).norm_inf() < 1e-10);
  CHECK_THROWS_AS(poisson_solve(TorusField(g, 1.0)), mfdeg::InputError);
}

TEST_CASE("integration") {
  TorusGrid g(64);
  CHECK(integrate(TorusField(g, 1.0)) == doctest::Approx(1.0));
  CHECK(std::abs(integrate(TorusField::sample(g, [](Point p) { return std::cos(2 * pi * p.x); }))) < 1e-14);
  auto e = TorusField::sample(g, [](Point p) { return std::exp(std::cos(2 * pi * p.x)); });
  CHECK(integrate(e) == doctest::Approx(1.2660658777520082).epsilon(1e-14));
}

TEST_CASE("gradient, hessian and interpolant on a band-limited field") {
  TorusGrid g(32);
  auto f = TorusField::sample(g, [](Point p) { return std::sin(2 * pi * p.x) * std::cos(4 * pi * p.y); });
  auto [fx, fy] = gradient(f);
  auto hs = hessian(f);
  const auto pt = g.node(5, 9);
  CHECK(fx(5, 9) == doctest::Approx(2 * pi * std::cos(2 * pi * pt.x) * std::cos(4 * pi * pt.y)));
  CHECK(fy(5, 9) == doctest::Approx(-4 * pi * std::sin(2 * pi * pt.x) * std::sin(4 * pi * pt.y)));
  CHECK(hs[1](5, 9) == doctest::Approx(-8 * pi * pi * std::cos(2 * pi * pt.x) * std::sin(4 * pi * pt.y)));

  SpectralInterpolant in(f);
  Point p{0.3141, 0.2718};
  CHECK(in.value(p) == doctest::Approx(std::sin(2 * pi * p.x) * std::cos(4 * pi * p.y)).epsilon(1e-12));
  auto gr = in.gradient(p);
  CHECK(gr[1] == doctest::Approx(-4 * pi * std::sin(2 * pi * p.x) * std::sin(4 * pi * p.y)).epsilon(1e-12));
  auto he = in.hessian(p);
  CHECK(he[3] == doctest::Approx(-16 * pi * pi * std::sin(2 * pi * p.x) * std::cos(4 * pi * p.y)).epsilon(1e-12));
  CHECK(dirichlet_energy(f) == doctest::Approx(inner(fx, fx) + inner(fy, fy)).epsilon(1e-12));
}

TEST_CASE("two-thirds filter removes high modes") {
  TorusGrid g(32);
  auto f = TorusField::sample(g, [](Point p) { return std::cos(2 * pi * 3 * p.x) + std::cos(2 * pi * 14 * p.y); });
  auto d = dealias_two_thirds(f);
  auto keep = TorusField::sample(g, [](Point p) { return std::cos(2 * pi * 3 * p.x); });
  CHECK((d - keep).norm_inf() < 1e-12);
}

TEST_CASE("lattice Green function against a direct Fourier sum") {
  for (Vec2 d : {Vec2{0.21, 0.13}, Vec2{-0.4, 0.05}, Vec2{0.5, 0.5}, Vec2{0.03, -0.37}}) {
    CHECK(lattice_green(d) == doctest::Approx(green_fourier(d, 300)).epsilon(1e-5));
  }
  // symmetric and periodic
  CHECK(lattice_green({0.1, 0.2}) == doctest::Approx(lattice_green({-0.1, -0.2})));
  CHECK(lattice_green({0.1, 0.2}) == doctest::Approx(lattice_green({1.1, -0.8})));
  CHECK(lattice_green({0.1, 0.2}) == doctest::Approx(lattice_green({0.2, 0.1})));
  // Kronecker limit: -log(2 pi eta(i)^2) / (2 pi)
  CHECK(lattice_regular_self() == doctest::Approx(-0.2085777932435014).epsilon(1e-13));
}

TEST_CASE("lattice Green gradient matches finite differences") {
  const double h = 1e-6;
  for (Vec2 d : {Vec2{0.21, 0.13}, Vec2{-0.4, -0.05}, Vec2{0.003, 0.002}, Vec2{0.31, -0.47}}) {
    auto gr = lattice_green_gradient(d);
    CHECK(gr[0] == doctest::Approx((lattice_green({d[0] + h, d[1]}) - lattice_green({d[0] - h, d[1]})) / (2 * h)).epsilon(1e-6));
    CHECK(gr[1] == doctest::Approx((lattice_green({d[0], d[1] + h}) - lattice_green({d[0], d[1] - h})) / (2 * h)).epsilon(1e-6));
    auto rr = lattice_regular_gradient(d);
    CHECK(rr[1] == doctest::Approx((lattice_regular({d[0], d[1] + h}) - lattice_regular({d[0], d[1] - h})) / (2 * h)).epsilon(1e-5));
  }
  // regular part is smooth through the pole with Laplacian 1
  const double e = 1e-3;
  const double lap = (lattice_regular({e, 0}) + lattice_regular({-e, 0}) + lattice_regular({0, e}) +
                      lattice_regular({0, -e}) - 4 * lattice_regular({0, 0})) / (e * e);
  CHECK(lap == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(lattice_vanishing_weight({0, 0}) == 0.0);
}

TEST_CASE("spectral Green function") {
  TorusGrid g(64);
  Point p{0.25, 0.5};
  auto gd = green(p, g);
  CHECK(std::abs(integrate(gd.field)) < 1e-14);
  // -Lap G = delta_n - 1 away from the pole: compare with lattice Green
  // at grid points far from p where the band-limited delta is small
  double worst = 0;
  for (int iy = 0; iy < 64; ++iy)
    for (int ix = 0; ix < 64; ++ix) {
      auto x = g.node(ix, iy);
      if (distance(x, p) < 0.2) continue;
      worst = std::max(worst, std::abs(gd.field(ix, iy) - lattice_green(min_image(x, p))));
    }
  CHECK(worst < 5e-3);

  // translation: shifting the pole by one cell shifts the field
  auto gq = green(Point{0.25 + 1.0 / 64, 0.5}, g);
  CHECK(std::abs(gq.field(17, 3) - gd.field(16, 3)) < 1e-12);

  // symmetry G(x, p) = G(p, x) at grid points
  auto a = g.node(3, 40), b = g.node(50, 7);
  CHECK(green(a, g).field(50, 7) == doctest::Approx(green(b, g).field(3, 40)).epsilon(1e-8));

  CHECK(gd.regular_self == doctest::Approx(green(Point{0.1, 0.7}, g).regular_self));
}

TEST_CASE("regular part extrapolation converges") {
  const double exact = lattice_regular_self();
  const double e64 = std::abs(pole_offset_estimate(64) - exact);
  const double e128 = std::abs(pole_offset_estimate(128) - exact);
  CHECK(e128 < e64);
  CHECK(e64 / e128 == doctest::Approx(4.0).epsilon(0.15));
  const double r128 = green(Point{}, TorusGrid(128)).regular_self;
  const double r256 = green(Point{}, TorusGrid(256)).regular_self;
  CHECK(std::abs(r128 - r256) < 1e-4);
  CHECK(std::abs(r256 - exact) < 1e-5);
}

TEST_CASE("serialization round trips") {
  TorusGrid g(8);
  auto f = random_band_limited(g, 2, 3);
  std::stringstream cs;
  write_csv(f, cs);
  auto fc = read_csv(cs);
  CHECK((fc - f).norm_inf() == 0.0);

  std::stringstream bs;
  write_binary(f, bs);
  const std::string bytes = bs.str();
  CHECK(bytes.size() == 8 + 64 * 8);
  CHECK(static_cast<unsigned char>(bytes[0]) == 8);
  CHECK(bytes[4] == 0);
  auto fb = read_binary(bs);
  CHECK((fb - f).norm_inf() == 0.0);

  std::stringstream bad("1,2\n3\n");
  CHECK_THROWS(read_csv(bad));
}
