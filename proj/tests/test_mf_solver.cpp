#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mfdeg/errors.hpp"
#include "mfdeg/mf_solver.hpp"

using namespace mfdeg::solver;
using mfdeg::torus::distance;
using std::numbers::pi;

namespace {

TorusField sample(TorusGrid g, double (*f)(Point)) { return TorusField::sample(g, f); }

ProblemParams uniform(TorusGrid g, double r1, double r2) {
  return ProblemParams(r1, r2, TorusField(g, 1.0), TorusField(g, 1.0));
}

ProblemParams paper_problem(TorusGrid g) {
  return ProblemParams(
      4 * pi, 4 * pi, sample(g, [](Point p) { return 1 + 0.5 * std::cos(2 * pi * p.x); }),
      sample(g, [](Point p) { return 1 + 0.3 * std::cos(2 * pi * p.y); }));
}

TorusField random_smooth(TorusGrid g, double amp, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  double c[3][3][2];
  for (auto& a : c)
    for (auto& b : a)
      for (double& v : b) v = amp * nd(rng);
  TorusField f = TorusField::sample(g, [&](Point p) {
    double s = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        s += c[i][j][0] * std::cos(2 * pi * (i * p.x + j * p.y)) +
             c[i][j][1] * std::sin(2 * pi * (i * p.x - j * p.y));
    return s;
  });
  return f.project_mean_zero();
}

double rel_err(const TorusField& a, const TorusField& b) {
  return (a - b).norm_inf() / std::max(1e-300, b.norm_inf());
}

}  // namespace

TEST_CASE("parameter validation") {
  TorusGrid g(16);
  CHECK_THROWS_AS(uniform(g, 0.0, 1.0), mfdeg::InputError);
  CHECK_THROWS_AS(uniform(g, 1.0, -1.0), mfdeg::InputError);
  CHECK_THROWS_AS(ProblemParams(1, 1, TorusField(g, 0.0), TorusField(g, 1.0)), mfdeg::InputError);
}

TEST_CASE("residual_scalar examples") {
  TorusGrid g(32);
  CHECK(residual_scalar(TorusField(g), uniform(g, 3.0, 5.0)).norm_inf() < 1e-14);

  auto params = ProblemParams(6.0, 6.0, sample(g, [](Point p) { return 2 + std::sin(2 * pi * p.y); }),
                              sample(g, [](Point p) { return 2 + std::sin(2 * pi * p.y); }));
  auto u = random_smooth(g, 0.3, 1);
  CHECK((residual_scalar(-u, params) + residual_scalar(u, params)).norm_inf() < 1e-12);

  TorusField big(g);
  big[0] = 800;
  CHECK_THROWS_AS(residual_scalar(big, params), mfdeg::BlowUpError);
}

TEST_CASE("residual_scalar matches a slow direct evaluation") {
  TorusGrid g(32);
  auto params = paper_problem(g);
  // u = 0.3 cos(2 pi x) + 0.2 sin(2 pi (x + 2y)), Laplacian known exactly
  auto u = TorusField::sample(g, [](Point p) {
    return 0.3 * std::cos(2 * pi * p.x) + 0.2 * std::sin(2 * pi * (p.x + 2 * p.y));
  });
  long double I1 = 0, I2 = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    I1 += params.h1[i] * std::exp(static_cast<long double>(u[i]));
    I2 += params.h2[i] * std::exp(-static_cast<long double>(u[i]));
  }
  I1 /= g.size();
  I2 /= g.size();
  auto F = residual_scalar(u, params);
  double worst = 0;
  for (int iy = 0; iy < 32; ++iy)
    for (int ix = 0; ix < 32; ++ix) {
      const Point p = g.node(ix, iy);
      const double lap = -4 * pi * pi * 0.3 * std::cos(2 * pi * p.x) -
                         20 * pi * pi * 0.2 * std::sin(2 * pi * (p.x + 2 * p.y));
      const std::size_t i = g.index(ix, iy);
      const double ref = lap + params.rho1 * (params.h1[i] * std::exp(u[i]) / I1 - 1) -
                         params.rho2 * (params.h2[i] * std::exp(-u[i]) / I2 - 1);
      worst = std::max(worst, std::abs(F[i] - ref));
    }
  CHECK(worst < 1e-10);
}

TEST_CASE("system and scalar residuals are consistent") {
  TorusGrid g(32);
  auto params = paper_problem(g);
  CHECK(residual_system(TorusField(g), TorusField(g), uniform(g, 2, 3)).first.norm_inf() < 1e-14);
  auto v1 = random_smooth(g, 0.1, 2), v2 = random_smooth(g, 0.1, 3);
  auto [r1, r2] = residual_system(v1, v2, params);
  CHECK(r1.is_mean_zero());
  CHECK(r2.is_mean_zero());
  // pointwise 1e-12, measured against the size of the Laplacian terms
  const double scale = std::max(1.0, laplacian(v1).norm_inf() + laplacian(v2).norm_inf());
  CHECK((r1 - r2 - residual_scalar(v1 - v2, params)).norm_inf() < 1e-12 * scale);
}

TEST_CASE("Jacobians agree with central differences") {
  TorusGrid g(32);
  auto params = paper_problem(g);
  auto u = random_smooth(g, 0.5, 4);
  const double h = 1e-6;
  for (unsigned k = 0; k < 10; ++k) {
    auto phi = random_smooth(g, 1.0, 100 + k);
    auto fd = (residual_scalar(u + phi * h, params) - residual_scalar(u - phi * h, params)) * (0.5 / h);
    CHECK(rel_err(jacobian_scalar(u, params, phi), fd) < 1e-6);
  }
  auto v1 = random_smooth(g, 0.4, 5), v2 = random_smooth(g, 0.4, 6);
  for (unsigned k = 0; k < 10; ++k) {
    auto p1 = random_smooth(g, 1.0, 200 + k), p2 = random_smooth(g, 1.0, 300 + k);
    auto [a1, a2] = residual_system(v1 + p1 * h, v2 + p2 * h, params);
    auto [b1, b2] = residual_system(v1 - p1 * h, v2 - p2 * h, params);
    auto [j1, j2] = jacobian_system(v1, v2, params, p1, p2);
    CHECK(rel_err(j1, (a1 - b1) * (0.5 / h)) < 1e-6);
    CHECK(rel_err(j2, (a2 - b2) * (0.5 / h)) < 1e-6);
  }
}

TEST_CASE("newton_scalar examples") {
  TorusGrid g(32);
  auto triv = newton_scalar(TorusField(g), uniform(g, 1.0, 1.0));
  CHECK(triv.converged);
  CHECK(triv.newton_iters <= 2);

  TorusGrid g64(64);
  ProblemParams p(4 * pi, 0.0, sample(g64, [](Point x) { return 1 + 0.5 * std::cos(2 * pi * x.x); }),
                  TorusField(g64, 1.0));
  auto rep = newton_scalar(TorusField(g64), p);
  REQUIRE(rep.converged);
  CHECK(rep.residual_norm <= 1e-9);
  CHECK(rep.fields[0].is_mean_zero());
  // quadratic convergence once close
  const auto& h = rep.history;
  REQUIRE(h.size() >= 3);
  for (std::size_t k = 1; k + 1 < h.size(); ++k)
    if (h[k] < 1e-2 && h[k + 1] > 1e-13) CHECK(h[k + 1] / (h[k] * h[k]) < 10.0);
}

TEST_CASE("sign flip symmetry of solutions") {
  TorusGrid g(32);
  auto hfun = [](Point p) { return 1 + 0.4 * std::cos(2 * pi * p.x) * std::cos(2 * pi * p.y); };
  ProblemParams p(5.0, 5.0, TorusField::sample(g, hfun), TorusField::sample(g, hfun));
  auto rep = newton_scalar(random_smooth(g, 0.1, 9), p);
  REQUIRE(rep.converged);
  // -u solves the problem with h1 and h2 swapped, here identical
  CHECK(residual_scalar(-rep.fields[0], p).norm_inf() <= 1e-9);
  auto rep2 = newton_scalar(-rep.fields[0], p);
  CHECK(rep2.converged);
  CHECK(rep2.newton_iters == 0);
}

TEST_CASE("decompose and newton_system") {
  TorusGrid g(32);
  auto params = paper_problem(g);
  auto z = decompose(TorusField(g), uniform(g, 1, 1));
  CHECK(z.first.norm_inf() < 1e-14);

  auto rep = newton_scalar(TorusField(g), params);
  REQUIRE(rep.converged);
  const auto& u = rep.fields[0];
  auto [v1, v2] = decompose(u, params);
  CHECK((v1 - v2 - u).norm_inf() <= 1e-12);
  CHECK(v1.is_mean_zero());
  auto [r1, r2] = residual_system(v1, v2, params);
  CHECK(std::max(r1.norm_inf(), r2.norm_inf()) <= 10 * std::max(rep.residual_norm, 1e-15));

  auto sys = newton_system(v1, v2, params);
  CHECK(sys.converged);
  CHECK(sys.newton_iters <= 1);

  auto cold = newton_system(TorusField(g), TorusField(g), params);
  REQUIRE(cold.converged);
  CHECK(cold.residual_norm <= 1e-9);
  CHECK((cold.fields[0] - cold.fields[1] - u).norm_inf() < 1e-7);
}

TEST_CASE("Morse counts") {
  TorusGrid g(32);
  CHECK(morse_count_scalar(TorusField(g), uniform(g, 4 * pi, 4 * pi)) == 0);
  CHECK(morse_count_system(TorusField(g), TorusField(g), uniform(g, 4 * pi, 4 * pi)) == 0);
  // above the first eigenvalue 4 pi^2 of -Lap the trivial solution is unstable;
  // the four modes cos/sin(2 pi x), cos/sin(2 pi y) turn negative
  CHECK(morse_count_scalar(TorusField(g), uniform(g, 25.0, 25.0)) == 4);
  CHECK(morse_count_system(TorusField(g), TorusField(g), uniform(g, 25.0, 25.0)) == 4);

  TorusGrid g16(16);
  auto params = paper_problem(g16);
  auto rep = newton_scalar(TorusField(g16), params);
  auto [v1, v2] = decompose(rep.fields[0], params);
  CHECK(morse_count_scalar(rep.fields[0], params) == morse_count_system(v1, v2, params));
  CHECK_THROWS_AS(morse_count_scalar(TorusField(TorusGrid(64)), uniform(TorusGrid(64), 1, 1)),
                  mfdeg::InputError);
}

TEST_CASE("local mass") {
  TorusGrid g(64);
  auto params = uniform(g, 3.0, 5.0);
  auto [s1, s2] = local_mass(TorusField(g), params, {0.3, 0.6}, 0.1);
  CHECK(s1 == doctest::Approx(3.0 * 0.01 / 2).epsilon(1e-3));
  CHECK(s2 == doctest::Approx(5.0 * 0.01 / 2).epsilon(1e-3));

  auto q = paper_problem(g);
  auto u = random_smooth(g, 0.5, 11);
  auto [t1, t2] = local_mass(u, q, {0.1, 0.2}, std::sqrt(0.5));
  CHECK(t1 == doctest::Approx(q.rho1 / (2 * pi)).epsilon(1e-12));
  CHECK(t2 == doctest::Approx(q.rho2 / (2 * pi)).epsilon(1e-12));
  CHECK_THROWS_AS(local_mass(u, q, {0, 0}, 0.8), mfdeg::InputError);
}

TEST_CASE("continuation") {
  TorusGrid g(32);
  auto triv = continue_rho1(TorusField(g), uniform(g, 2.0, 1.0), {4.0, 8.0, 12.0});
  CHECK(triv.completed);
  for (const auto& pt : triv.points) CHECK(pt.report.fields[0].norm_inf() < 1e-12);
  CHECK(triv.points.back().rho1 == 12.0);

  // log h has a non-degenerate maximum with negative Laplacian + 8 pi; the
  // branch concentrates as rho1 increases towards 8 pi
  ProblemParams p(4 * pi, 0.0,
                  sample(g, [](Point x) { return std::exp(std::cos(2 * pi * x.x) + std::cos(2 * pi * x.y)); }),
                  TorusField(g, 1.0));
  auto start = newton_scalar(TorusField(g), p);
  REQUIRE(start.converged);
  ContinuationOptions opts;
  opts.initial_step = pi;
  auto br = continue_rho1(start.fields[0], p, {5 * pi, 6 * pi, 7 * pi}, opts);
  CHECK(br.completed);
  for (std::size_t k = 1; k < br.points.size(); ++k) {
    CHECK(br.points[k].max_u >= br.points[k - 1].max_u);
    CHECK(br.points[k].sigma1 >= br.points[k - 1].sigma1);
  }
}
