#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mfdeg/bubble.hpp"
#include "mfdeg/errors.hpp"
#include "mfdeg/lattice_green.hpp"

using namespace mfdeg;
using namespace mfdeg::bubble;
using std::numbers::pi;

namespace {

SurfaceFunctionPtr fn(const char* text) { return expression_function(Expression::parse(text)); }

BubbleAnsatz flat(double lambda, Point q = {0.3, 0.4}) {
  return BubbleAnsatz(q, lambda, 1.0, 8 * pi, fn("1"));
}

}  // namespace

TEST_CASE("standard bubble peak and half-height radius") {
  const BubbleAnsatz b(Point{0.5, 0.5}, 7.0, 1.0, 8 * pi, fn("2 + cos(2*pi*x)"));
  CHECK(standard_bubble_U(b.q(), b) == doctest::Approx(7.0).epsilon(1e-15));
  const double r = std::sqrt(8 * std::exp(-7.0) / (b.rho1() * b.h_q()));
  CHECK(standard_bubble_U({0.5 + r, 0.5}, b) == doctest::Approx(7.0 - 2 * std::log(2.0)));
  double prev = 8.0;
  for (double d = 0; d < 0.4; d += 0.01) {
    const double u = standard_bubble_U({0.5, 0.5 + d}, b);
    CHECK(u < prev);
    prev = u;
  }
}

TEST_CASE("discrete bubble identity converges at second order") {
  const BubbleAnsatz b = flat(6.0);
  const double e1 = bubble_identity_residual(b, 128);
  const double e2 = bubble_identity_residual(b, 256);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("H vanishes at q and J is flat there") {
  const BubbleAnsatz b(Point{0.2, 0.7}, 8.0, 1.0, 8 * pi, fn("exp(0.3*cos(2*pi*x) + 0.2*sin(2*pi*y))"));
  CHECK(H_function(b.q(), b) == doctest::Approx(0.0));
  CHECK(J_function(b.q(), b) == doctest::Approx(0.0));
  const double d = 1e-6;
  const Point q = b.q();
  const double jx = (J_function({q.x + d, q.y}, b) - J_function({q.x - d, q.y}, b)) / (2 * d);
  const double jy = (J_function({q.x, q.y + d}, b) - J_function({q.x, q.y - d}, b)) / (2 * d);
  CHECK(std::abs(jx) < 1e-6);
  CHECK(std::abs(jy) < 1e-6);
  // H itself has gradient grad log h(q), which is not zero here
  const double hx = (H_function({q.x + d, q.y}, b) - H_function({q.x - d, q.y}, b)) / (2 * d);
  CHECK(hx == doctest::Approx(b.grad_H_q()[0]).epsilon(1e-6));
}

TEST_CASE("H for constant h is the Green regular part") {
  const BubbleAnsatz b = flat(8.0);
  const Point x{0.45, 0.3};
  const double R = torus::lattice_regular(torus::min_image(x, b.q()));
  CHECK(H_function(x, b) ==
        doctest::Approx(std::expm1(8 * pi * (R - torus::lattice_regular_self()))));
  CHECK(b.lap_H_q() == doctest::Approx(8 * pi));
}

TEST_CASE("eta leading term") {
  const BubbleAnsatz b = flat(9.0);
  const Point x{b.q().x + 1.0 / b.core_scale(), b.q().y};
  const double expect = -8 * b.lap_H_q() / (b.rho1() * b.h_q()) * std::exp(-9.0) *
                        std::pow(std::log(3.0), 2);
  CHECK(eta_leading(x, b) == doctest::Approx(expect).epsilon(1e-12));

  // log h = (cos 2 pi x + cos 2 pi y) / pi has Lap log h(0) = -8 pi and no gradient at 0
  const BubbleAnsatz z(Point{0, 0}, 9.0, 1.0, 8 * pi, fn("exp((cos(2*pi*x) + cos(2*pi*y))/pi)"));
  CHECK(std::abs(z.lap_H_q()) < 1e-10);
  CHECK(std::abs(eta_leading({0.1, 0.05}, z)) < 1e-14);
}

TEST_CASE("s and t") {
  CHECK(s_formula(9.0, 8.0, 0.0, 0.0) == doctest::Approx(9.0));
  double prev = -1e9;
  for (double l = 4; l <= 16; l += 0.5) {
    const double s = s_value(flat(l));
    CHECK(s > prev);
    prev = s;
  }
  std::vector<double> ls{8, 10, 12}, means;
  for (double l : ls) {
    const BubbleAnsatz b = flat(l);
    CHECK(t_value(b) - s_value(b) == doctest::Approx(-vq_mean(b)));
    means.push_back(vq_mean(b));
  }
  CHECK(fit_decay_exponent(ls, means) > 0.8);
}

TEST_CASE("v_q matches 8 pi G outside the cutoff and assembles mean-zero") {
  const BubbleAnsatz b = flat(8.0);
  for (Point x : {Point{0.7, 0.4}, Point{0.3, 0.9}, Point{0.75, 0.85}}) {
    const double g = 8 * pi * torus::lattice_green(torus::min_image(x, b.q()));
    CHECK(vq_value(x, b) == doctest::Approx(g).epsilon(1e-14));
  }
  // inner and cutoff formulas agree across r0
  const double r0 = b.r0();
  const double in = vq_value({b.q().x + r0 * (1 - 1e-9), b.q().y}, b);
  const double out = vq_value({b.q().x + r0 * (1 + 1e-9), b.q().y}, b);
  CHECK(in == doctest::Approx(out).epsilon(1e-7));

  const torus::TorusGrid g(64);
  const auto v = assemble_vq(b.with_a(1.05), g);
  CHECK(std::abs(v.mean()) <= 1e-12);
  const auto v1 = assemble_vq(b, g);
  CHECK(v[5] == doctest::Approx(1.05 * v1[5]));

  std::vector<double> ls{8, 10, 12}, gaps;
  for (double l : ls) {
    const BubbleAnsatz bl = flat(l);
    double worst = 0;
    const double mean = vq_mean(bl);
    for (int k = 0; k < 64; ++k) {
      const double r = r0 * (1 + k / 64.0);
      const Point x{bl.q().x + r, bl.q().y};
      const double g8 = 8 * pi * torus::lattice_green(torus::min_image(x, bl.q()));
      worst = std::max(worst, std::abs(vq_value(x, bl) - mean - g8));
    }
    gaps.push_back(worst);
  }
  CHECK(fit_decay_exponent(ls, gaps) > 0.8);
}

TEST_CASE("l(p) on the torus") {
  CHECK(l_of_p({0.2, 0.3}, 8 * pi, *fn("3")) == doctest::Approx(0.0));
  CHECK(l_of_p({0, 0}, 4 * pi, *fn("exp(cos(2*pi*x))")) ==
        doctest::Approx(4 * pi - 4 * pi * pi));
}

TEST_CASE("lambda of rho1 round trip and errors") {
  // l = 1, h = 1: lambda e^-lambda = (rho1 - 8 pi) / 2
  CHECK(lambda_of_rho1(8 * pi + 20 * std::exp(-10.0), 1.0, 1.0) == doctest::Approx(10.0));
  CHECK(lambda_of_rho1(8 * pi + 4 * std::exp(-2.0), 1.0, 1.0) == doctest::Approx(2.0));
  for (double rho1 : {8 * pi + 1e-4, 8 * pi + 0.3, 8 * pi - 0.2}) {
    const double l = rho1 > 8 * pi ? 1.7 : -2.5;
    const double lam = lambda_of_rho1(rho1, l, 1.3);
    CHECK(std::abs(rho1_of_lambda(lam, l, 1.3) - rho1) <= 1e-12 * rho1);
  }
  CHECK_THROWS_AS(lambda_of_rho1(8 * pi + 0.1, -1.0, 1.0), InputError);
  CHECK_THROWS_AS(lambda_of_rho1(8 * pi, 1.0, 1.0), InputError);
  CHECK_THROWS_AS(lambda_of_rho1(8 * pi + 1.0, 1.0, 1.0), InputError);
  CHECK_THROWS_AS(lambda_of_rho1(8 * pi + 1.0, 0.0, 1.0), InputError);
}

TEST_CASE("membership in the ansatz neighbourhoods") {
  const torus::TorusGrid g(64);
  const BubbleAnsatz b = flat(8.0);
  const auto w = torus::TorusField::sample(g, [](Point x) { return 0.1 * std::cos(2 * pi * x.x); });
  const auto v1 = assemble_vq(b, g);
  auto m = membership_S(v1, w, b, w, 1.0, b.q(), 8.0);
  CHECK(m.first);
  CHECK(m.second);

  m = membership_S(v1, w * 3.0, b, w, 1.0, b.q(), 8.0);
  CHECK(m.first);
  CHECK_FALSE(m.second);

  const double c1 = 1.0;
  const BubbleAnsatz off = b.with_a(1 + 2 * c1 * std::exp(-8.0) / std::sqrt(8.0));
  m = membership_S(assemble_vq(off, g), w, off, w, c1, b.q(), 8.0);
  CHECK_FALSE(m.first);
}

TEST_CASE("fit_ansatz recovers the bubble location") {
  const torus::TorusGrid g(128);
  const BubbleAnsatz b = flat(6.0, {0.25, 0.5});
  const BubbleAnsatz f = fit_ansatz(assemble_vq(b, g), b.rho1(), fn("1"));
  CHECK(torus::distance(f.q(), b.q()) < 1e-12);
  CHECK(f.lambda() == doctest::Approx(6.0).epsilon(0.1));
  CHECK(f.a() == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("mass expansion") {
  const auto c = mass_expansion_check(flat(8.0), {8, 10, 12});
  REQUIRE(c.rows.size() == 3);
  CHECK(c.rows[0].residual / (8 * pi) <= 0.05);
  CHECK(c.fitted_exponent >= 0.8);
  // leading term alone approaches 8 pi monotonically
  CHECK(std::abs(c.rows[2].measured - 8 * pi) < std::abs(c.rows[1].measured - 8 * pi));
  CHECK(std::abs(c.rows[1].measured - 8 * pi) < std::abs(c.rows[0].measured - 8 * pi));

  CHECK_THROWS_AS(mass_expansion_check(flat(8.0), {8, 10}), InputError);
  QuadratureOptions grid{Quadrature::Grid, 64};
  CHECK_THROWS_AS(mass_expansion_check(flat(8.0), {8, 10, 12}, grid), ResolutionError);
}

TEST_CASE("mass expansion by grid quadrature at resolvable lambda") {
  QuadratureOptions grid{Quadrature::Grid, 512};
  const auto g = mass_expansion_check(flat(4.0), {4, 4.5, 5}, grid);
  const auto p = mass_expansion_check(flat(4.0), {4, 4.5, 5});
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(g.rows[i].measured == doctest::Approx(p.rows[i].measured).epsilon(1e-3));
}

TEST_CASE("projections") {
  const auto p = projection_checks(flat(8.0), {8, 10, 12});
  for (const auto& v : p.dq_measured) {
    CHECK(std::abs(v[0]) < 1e-8);
    CHECK(std::abs(v[1]) < 1e-8);
  }
  const auto& d = p.dlambda.rows;
  CHECK(d[1].residual < d[0].residual);
  CHECK(d[2].residual < d[1].residual);
  for (const auto& r : d) CHECK(r.measured == doctest::Approx(r.predicted).epsilon(0.25));
}

TEST_CASE("bilinear form is coercive on the orthogonal complement") {
  const auto c = bilinear_form_check(flat(6.0), torus::TorusGrid(128), 4, 7);
  REQUIRE(c.ratios.size() == 4);
  CHECK(c.min_ratio > 0.0);
}
