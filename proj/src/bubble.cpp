#include "mfdeg/bubble.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

#include "mfdeg/errors.hpp"
#include "mfdeg/lattice_green.hpp"
#include "mfdeg/mf_solver.hpp"

namespace mfdeg::bubble {

using std::numbers::pi;
using torus::lattice_green;
using torus::lattice_regular;
using torus::lattice_regular_self;
using torus::min_image;

namespace {

constexpr double kEightPi = 8.0 * pi;

// Radial pieces of v_q: U, eta (normalised) and their derivatives.
struct Profile {
  double U, dU, lapU;
  double eta, deta, lapEta;
};

Profile radial_profile(const BubbleAnsatz& b, double r) {
  const double Rs = b.core_scale();
  const double Rs2 = Rs * Rs;
  const double z = Rs2 * r * r;
  Profile p{};
  p.U = b.lambda() - 2.0 * std::log1p(z);
  p.dU = -4.0 * Rs2 * r / (1.0 + z);
  p.lapU = -8.0 * Rs2 / ((1.0 + z) * (1.0 + z));

  const double kappa = 8.0 * b.lap_H_q() / (b.rho1() * b.h_q());
  const double amp = -kappa * std::exp(-b.lambda());
  const double D = Rs * r + 2.0;
  const double L = std::log(D);
  const double l2 = std::log(2.0);
  const double g1 = 2.0 * L * Rs / D;
  const double g2 = 2.0 * Rs2 * (1.0 - L) / (D * D);
  p.eta = amp * (L * L - l2 * l2);
  p.deta = amp * g1;
  p.lapEta = r > 0.0 ? amp * (g2 + g1 / r) : 0.0;
  return p;
}

struct Smooth {
  double s, ds, dds;
};

Smooth smoothstep(double r, double r0) {
  if (r <= r0) return {1.0, 0.0, 0.0};
  if (r >= 2.0 * r0) return {0.0, 0.0, 0.0};
  const double t = (r - r0) / r0;
  const double t2 = t * t;
  return {1.0 - (10.0 * t2 * t - 15.0 * t2 * t2 + 6.0 * t2 * t2 * t),
          -(30.0 * t2 - 60.0 * t2 * t + 30.0 * t2 * t2) / r0,
          -(60.0 * t - 180.0 * t2 + 120.0 * t2 * t) / (r0 * r0)};
}

// F = sigma * (U + eta + 4 log r + s - 8 pi R0), the correction added to 8 pi G.
struct Correction {
  double F, lapF;
};

Correction correction(const BubbleAnsatz& b, double s, double r) {
  const Smooth sg = smoothstep(r, b.r0());
  if (sg.s == 0.0 && sg.ds == 0.0) return {0.0, 0.0};
  const Profile p = radial_profile(b, r);
  const double R0 = lattice_regular_self();
  const double B = p.U + p.eta + 4.0 * std::log(r) + s - kEightPi * R0;
  const double dB = p.dU + p.deta + 4.0 / r;
  const double lapB = p.lapU + p.lapEta;
  return {sg.s * B, sg.dds * B + sg.ds * B / r + 2.0 * sg.ds * dB + sg.s * lapB};
}

double vq_with_s(Point x, const BubbleAnsatz& b, double s) {
  const Vec2 d = min_image(x, b.q());
  const double r = std::hypot(d[0], d[1]);
  if (r < b.r0()) {
    const Profile p = radial_profile(b, r);
    return p.U + p.eta + kEightPi * (lattice_regular(d) - lattice_regular_self()) + s;
  }
  return kEightPi * lattice_green(d) + correction(b, s, r).F;
}

double vq_laplacian_with_s(Point x, const BubbleAnsatz& b, double s) {
  const Vec2 d = min_image(x, b.q());
  const double r = std::hypot(d[0], d[1]);
  return kEightPi + correction(b, s, r).lapF;
}

const auto& gauss_nodes() {
  using G = boost::math::quadrature::gauss<double, 20>;
  static const auto nodes = [] {
    std::vector<std::pair<double, double>> out;  // on [-1, 1]
    const auto& x = G::abscissa();
    const auto& w = G::weights();
    for (std::size_t i = 0; i < x.size(); ++i) {
      out.emplace_back(x[i], w[i]);
      if (x[i] != 0.0) out.emplace_back(-x[i], w[i]);
    }
    return out;
  }();
  return nodes;
}

std::vector<std::pair<double, double>> radial_panels(double Rs, double r0, double rmax) {
  std::vector<std::pair<double, double>> p;
  double a = std::min(0.01 / Rs, r0);
  p.emplace_back(0.0, a);
  while (a < r0) {
    const double b = std::min(a * 1.5, r0);
    p.emplace_back(a, b);
    a = b;
  }
  for (int k = 0; k < 4; ++k) p.emplace_back(r0 * (1.0 + k / 4.0), r0 * (1.0 + (k + 1) / 4.0));
  const double lo = 2.0 * r0;
  if (rmax > lo * (1.0 + 1e-12))
    for (int k = 0; k < 4; ++k)
      p.emplace_back(lo + (rmax - lo) * k / 4.0, lo + (rmax - lo) * (k + 1) / 4.0);
  return p;
}

// Polar quadrature over the torus centred at q, each sector clipped to the
// fundamental square around q. Integrand returns K values.
template <std::size_t K, class F>
std::array<double, K> polar_integrate(const BubbleAnsatz& b, F&& f) {
  const auto& nodes = gauss_nodes();
  const double Rs = b.core_scale();
  const Point q = b.q();
  std::array<double, K> acc{};
  constexpr int sectors = 8;
  for (int s = 0; s < sectors; ++s) {
    const double t0 = 2.0 * pi * s / sectors, t1 = 2.0 * pi * (s + 1) / sectors;
    for (const auto& [xt, wt] : nodes) {
      const double th = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * xt;
      const double c = std::cos(th), sn = std::sin(th);
      const double rmax = 0.5 / std::max(std::abs(c), std::abs(sn));
      const double wth = 0.5 * (t1 - t0) * wt;
      for (const auto& [ra, rb] : radial_panels(Rs, b.r0(), rmax)) {
        for (const auto& [xr, wr] : nodes) {
          const double r = 0.5 * (ra + rb) + 0.5 * (rb - ra) * xr;
          const double w = wth * 0.5 * (rb - ra) * wr * r;
          const std::array<double, K> v = f(Point{q.x + r * c, q.y + r * sn}, r);
          for (std::size_t k = 0; k < K; ++k) acc[k] += w * v[k];
        }
      }
    }
  }
  return acc;
}

// One-dimensional radial integral 2 pi int_0^{2 r0} g(r) r dr.
template <class F>
double radial_integrate(const BubbleAnsatz& b, F&& g) {
  const auto& nodes = gauss_nodes();
  double acc = 0.0;
  for (const auto& [ra, rb] : radial_panels(b.core_scale(), b.r0(), 2.0 * b.r0()))
    for (const auto& [xr, wr] : nodes) {
      const double r = 0.5 * (ra + rb) + 0.5 * (rb - ra) * xr;
      acc += 0.5 * (rb - ra) * wr * r * g(r);
    }
  return 2.0 * pi * acc;
}

}  // namespace

BubbleAnsatz::BubbleAnsatz(Point q, double lambda, double a, double rho1, SurfaceFunctionPtr h1,
                           std::optional<TorusField> w, double r0)
    : h1_(std::move(h1)), q_(torus::wrap(q)), lambda_(lambda), a_(a), rho1_(rho1), r0_(r0),
      w_(std::move(w)) {
  if (!h1_) throw InputError("bubble ansatz needs h1");
  if (!(lambda_ >= 4.0)) throw InputError("bubble ansatz needs lambda >= 4");
  if (!(std::abs(a_ - 1.0) <= 0.1)) throw InputError("bubble ansatz needs |a - 1| <= 0.1");
  if (!(r0_ > 0.0 && r0_ <= 0.25)) throw InputError("cutoff radius must lie in (0, 1/4]");
  if (!(rho1_ > 0.0)) throw InputError("rho1 must be positive");
  std::vector<std::pair<double, SurfaceFunctionPtr>> terms{{1.0, log_function(h1_)}};
  if (w_) terms.emplace_back(-1.0, field_function(*w_));
  log_h_ = linear_combination(std::move(terms));
  h_q_ = std::exp(log_h_->value(q_));
  if (!(h_q_ > 0.0) || !std::isfinite(h_q_)) throw InputError("h must be positive at q");
  grad_log_h_q_ = log_h_->gradient(q_);
  lap_H_q_ = log_h_->laplacian(q_) + kEightPi + grad_log_h_q_[0] * grad_log_h_q_[0] +
             grad_log_h_q_[1] * grad_log_h_q_[1];
}

BubbleAnsatz BubbleAnsatz::with_q(Point q) const {
  return BubbleAnsatz(q, lambda_, a_, rho1_, h1_, w_, r0_);
}
BubbleAnsatz BubbleAnsatz::with_lambda(double lambda) const {
  if (!(lambda >= 4.0)) throw InputError("bubble ansatz needs lambda >= 4");
  BubbleAnsatz b = *this;
  b.lambda_ = lambda;
  return b;
}
// Difference-quotient neighbour; may step just below the lambda >= 4 floor.
BubbleAnsatz lambda_shift(const BubbleAnsatz& b, double dl) {
  BubbleAnsatz out = b;
  out.lambda_ = b.lambda_ + dl;
  return out;
}

BubbleAnsatz BubbleAnsatz::with_a(double a) const {
  if (!(std::abs(a - 1.0) <= 0.1)) throw InputError("bubble ansatz needs |a - 1| <= 0.1");
  BubbleAnsatz b = *this;
  b.a_ = a;
  return b;
}

double BubbleAnsatz::core_scale() const { return std::sqrt(c() * std::exp(lambda_)); }

double cutoff(double r, double r0) { return smoothstep(r, r0).s; }

double standard_bubble_U(Point x, const BubbleAnsatz& b) {
  const double r = torus::distance(x, b.q());
  return radial_profile(b, r).U;
}

double H_function(Point x, const BubbleAnsatz& b) {
  const Vec2 d = min_image(x, b.q());
  const double e = b.log_h(x) - std::log(b.h_q()) +
                   kEightPi * (lattice_regular(d) - lattice_regular_self());
  return std::expm1(e);
}

double J_function(Point x, const BubbleAnsatz& b) {
  const Vec2 d = min_image(x, b.q());
  const Vec2 g = b.grad_H_q();
  const double r = std::hypot(d[0], d[1]);
  return (H_function(x, b) - g[0] * d[0] - g[1] * d[1]) * cutoff(r, b.r0());
}

double eta_leading(Point x, const BubbleAnsatz& b) {
  const double r = torus::distance(x, b.q());
  const double L = std::log(b.core_scale() * r + 2.0);
  return -8.0 * b.lap_H_q() / (b.rho1() * b.h_q()) * std::exp(-b.lambda()) * L * L;
}

double s_formula(double lambda, double rho1_h_q, double R_qq, double lap_H_q) {
  return lambda + 2.0 * std::log(rho1_h_q / 8.0) + kEightPi * R_qq +
         2.0 * lap_H_q * lambda * lambda * std::exp(-lambda) / rho1_h_q;
}

double s_value(const BubbleAnsatz& b) {
  return s_formula(b.lambda(), b.rho1() * b.h_q(), lattice_regular_self(), b.lap_H_q());
}

double vq_mean(const BubbleAnsatz& b) {
  // 8 pi G has zero mean, so only the compactly supported correction counts.
  const double s = s_value(b);
  return radial_integrate(b, [&](double r) { return correction(b, s, r).F; });
}

double t_value(const BubbleAnsatz& b) { return s_value(b) - vq_mean(b); }

double vq_value(Point x, const BubbleAnsatz& b) { return vq_with_s(x, b, s_value(b)); }

double vq_laplacian(Point x, const BubbleAnsatz& b) {
  return vq_laplacian_with_s(x, b, s_value(b));
}

TorusField assemble_vq(const BubbleAnsatz& b, const TorusGrid& g) {
  const double s = s_value(b);
  const double mean = vq_mean(b);
  TorusField f = TorusField::sample(g, [&](Point x) {
    if (torus::distance(x, b.q()) == 0.0) {
      const Profile p = radial_profile(b, 0.0);
      return p.U + p.eta + s - mean;
    }
    return vq_with_s(x, b, s) - mean;
  });
  // Grid sampling of the peaked profile does not integrate exactly to the
  // continuum mean; enforce the discrete mean as well.
  f.project_mean_zero();
  f *= b.a();
  return f;
}

double l_of_p(Point p, double rho2, const SurfaceFunction& h1) {
  const double v = h1.value(p);
  if (!(v > 0.0)) throw InputError("h1 must be positive");
  const Vec2 g = h1.gradient(p);
  const double lap_log = h1.laplacian(p) / v - (g[0] * g[0] + g[1] * g[1]) / (v * v);
  return lap_log - rho2 + kEightPi;
}

double lambda_of_rho1(double rho1, double l, double h_p) {
  if (l == 0.0) throw InputError("l(p) = 0: lambda(rho1) undefined");
  if (!(h_p > 0.0)) throw InputError("h(p) must be positive");
  const double c = (rho1 - kEightPi) * h_p / (2.0 * l);
  if (!(c > 0.0))
    throw InputError("sign of rho1 - 8 pi must match the sign of l(p) (and rho1 != 8 pi)");
  if (c >= std::exp(-1.0)) throw InputError("lambda e^-lambda = c has no large-lambda branch");
  // lambda - log lambda = m on lambda > 1.
  const double m = -std::log(c);
  double lam = m + std::log(m) + 1.0;
  for (int it = 0; it < 100; ++it) {
    const double f = lam - std::log(lam) - m;
    const double step = f / (1.0 - 1.0 / lam);
    lam -= step;
    if (lam <= 1.0) lam = 1.0 + 1e-12;
    if (std::abs(step) <= 1e-15 * lam) break;
  }
  return lam;
}

double rho1_of_lambda(double lambda, double l, double h_p) {
  return kEightPi + 2.0 * l * lambda * std::exp(-lambda) / h_p;
}

double h1_norm(const TorusField& f) {
  return std::sqrt(torus::inner(f, f) + torus::dirichlet_energy(f));
}

double w24_norm(const TorusField& f) {
  const auto g = torus::gradient(f);
  const auto h = torus::hessian(f);
  double acc = 0.0;
  for (std::size_t i = 0; i < f.grid().size(); ++i) {
    const double v = f[i];
    const double gg = g[0][i] * g[0][i] + g[1][i] * g[1][i];
    const double hh = h[0][i] * h[0][i] + 2.0 * h[1][i] * h[1][i] + h[2][i] * h[2][i];
    acc += v * v * v * v + gg * gg + hh * hh;
  }
  return std::pow(acc * f.grid().cell_area(), 0.25);
}

Membership membership_S(const TorusField& v1, const TorusField& v2, const BubbleAnsatz& b,
                        const TorusField& w, double c1, Point p, double lambda_rho1) {
  const double lam = b.lambda();
  const double band = c1 * lam * std::exp(-lam);
  const TorusField phi = v1 - assemble_vq(b, v1.grid());
  const TorusField psi = v2 - w;
  Membership m;
  m.first = torus::distance(b.q(), p) <= band && std::abs(lam - lambda_rho1) <= c1 / lam &&
            std::abs(b.a() - 1.0) <= c1 * std::exp(-lam) / std::sqrt(lam) &&
            h1_norm(phi) <= band;
  m.second = w24_norm(psi) <= band;
  return m;
}

BubbleAnsatz fit_ansatz(const TorusField& v1, double rho1, SurfaceFunctionPtr h1,
                        std::optional<TorusField> w) {
  const Point q = solver::argmax(v1);
  BubbleAnsatz probe(q, 4.0, 1.0, rho1, h1, w);
  const double R0 = lattice_regular_self();
  const double lam = std::max(
      4.0, 0.5 * (v1.max() - 2.0 * std::log(probe.c()) - kEightPi * R0));
  BubbleAnsatz b = probe.with_lambda(lam);
  const auto& g = v1.grid();
  double num = 0.0, den = 0.0;
  const double mean = vq_mean(b);
  for (int iy = 0; iy < g.n(); ++iy)
    for (int ix = 0; ix < g.n(); ++ix) {
      const Point x = g.node(ix, iy);
      const Vec2 d = min_image(x, q);
      if (std::hypot(d[0], d[1]) < 2.0 * b.r0()) continue;
      const double ref = kEightPi * lattice_green(d) - mean;
      num += v1(ix, iy) * ref;
      den += ref * ref;
    }
  const double a = den > 0.0 ? std::clamp(num / den, 0.9, 1.1) : 1.0;
  return b.with_a(a);
}

double fit_decay_exponent(const std::vector<double>& lambdas, const std::vector<double>& values) {
  if (lambdas.size() != values.size() || lambdas.size() < 2)
    throw InputError("decay fit needs matching samples, at least two");
  const double n = static_cast<double>(lambdas.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const double y = std::log(std::max(std::abs(values[i]), 1e-300));
    sx += lambdas[i];
    sy += y;
    sxx += lambdas[i] * lambdas[i];
    sxy += lambdas[i] * y;
  }
  return -(n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double integrate_around(const BubbleAnsatz& b, const std::function<double(Point, double)>& f,
                        const QuadratureOptions& opts) {
  if (opts.kind == Quadrature::Polar)
    return polar_integrate<1>(b, [&](Point x, double r) { return std::array{f(x, r)}; })[0];
  const TorusGrid g(opts.grid_n);
  if (std::exp(-b.lambda() / 2.0) < 4.0 * g.spacing())
    throw ResolutionError("grid too coarse for the bubble core: e^{-lambda/2} < 4/n");
  double acc = 0.0;
  for (int iy = 0; iy < g.n(); ++iy)
    for (int ix = 0; ix < g.n(); ++ix) {
      const Point x = g.node(ix, iy);
      acc += f(x, torus::distance(x, b.q()));
    }
  return acc * g.cell_area();
}

namespace {

void check_lambdas(const std::vector<double>& lambdas) {
  if (lambdas.size() < 3) throw InputError("expansion checks need at least 3 lambda samples");
  for (std::size_t i = 1; i < lambdas.size(); ++i)
    if (!(lambdas[i] > lambdas[i - 1])) throw InputError("lambda samples must increase");
}

ExpansionCheck finish(std::vector<ExpansionRow> rows) {
  ExpansionCheck c;
  std::vector<double> l, r;
  for (const auto& row : rows) {
    l.push_back(row.lambda);
    r.push_back(row.residual);
  }
  c.rows = std::move(rows);
  c.fitted_exponent = fit_decay_exponent(l, r);
  return c;
}

}  // namespace

ExpansionCheck mass_expansion_check(const BubbleAnsatz& base, const std::vector<double>& lambdas,
                                    const QuadratureOptions& opts) {
  check_lambdas(lambdas);
  std::vector<ExpansionRow> rows;
  for (double lam : lambdas) {
    const BubbleAnsatz b = base.with_lambda(lam).with_a(1.0);
    const double s = s_value(b);
    const double rho1 = b.rho1();
    const double measured = integrate_around(
        b,
        [&](Point x, double) { return rho1 * std::exp(b.log_h(x) + vq_with_s(x, b, s) - s); },
        opts);
    const double predicted =
        kEightPi + 16.0 * pi / (rho1 * b.h_q()) * b.lap_H_q() * lam * std::exp(-lam);
    rows.push_back({lam, measured, predicted, std::abs(measured - predicted)});
  }
  return finish(std::move(rows));
}

ProjectionChecks projection_checks(const BubbleAnsatz& base, const std::vector<double>& lambdas) {
  check_lambdas(lambdas);
  ProjectionChecks out;
  std::vector<ExpansionRow> dq_rows, dl_rows, vq_rows;
  for (double lam : lambdas) {
    const BubbleAnsatz b = base.with_lambda(lam).with_a(1.0);
    const double rho1 = b.rho1();
    const double s = s_value(b);
    const double I = integrate_around(b, [&](Point x, double) {
      return std::exp(b.log_h(x) + vq_with_s(x, b, s) - s);
    });

    const double dl = 1e-5 * lam;
    const BubbleAnsatz lp = lambda_shift(b, dl), lm = lambda_shift(b, -dl);
    const double dq = 1e-5;
    const Point q = b.q();
    const BubbleAnsatz xp = b.with_q({q.x + dq, q.y}), xm = b.with_q({q.x - dq, q.y});
    const BubbleAnsatz yp = b.with_q({q.x, q.y + dq}), ym = b.with_q({q.x, q.y - dq});
    const double s_lp = s_value(lp), s_lm = s_value(lm);
    const double s_xp = s_value(xp), s_xm = s_value(xm), s_yp = s_value(yp), s_ym = s_value(ym);

    const auto proj = polar_integrate<4>(b, [&](Point x, double) {
      const double v = vq_with_s(x, b, s);
      const double res =
          vq_laplacian_with_s(x, b, s) + rho1 * std::exp(b.log_h(x) + v - s) / I - rho1;
      const double g_l = (vq_with_s(x, lp, s_lp) - vq_with_s(x, lm, s_lm)) / (2.0 * dl);
      const double g_x = (vq_with_s(x, xp, s_xp) - vq_with_s(x, xm, s_xm)) / (2.0 * dq);
      const double g_y = (vq_with_s(x, yp, s_yp) - vq_with_s(x, ym, s_ym)) / (2.0 * dq);
      return std::array{-g_x * res, -g_y * res, -g_l * res, -v * res};
    });

    const double rho_h = rho1 * b.h_q();
    const double theta =
        ((rho1 - kEightPi) - 16.0 * pi / rho_h * b.lap_H_q() * lam * std::exp(-lam)) / kEightPi;
    const Vec2 gH = b.grad_H_q();
    const Vec2 dq_pred{-kEightPi * gH[0], -kEightPi * gH[1]};
    const Vec2 dq_meas{proj[0], proj[1]};
    const double dl_pred = -kEightPi * theta;
    const double vq_pred = (2.0 * lam - 2.0 + kEightPi * lattice_regular_self() +
                            2.0 * std::log(rho_h / 8.0)) * proj[2];

    out.dq_measured.push_back(dq_meas);
    out.dq_predicted.push_back(dq_pred);
    dq_rows.push_back({lam, std::hypot(dq_meas[0], dq_meas[1]), std::hypot(dq_pred[0], dq_pred[1]),
                       std::hypot(dq_meas[0] - dq_pred[0], dq_meas[1] - dq_pred[1])});
    dl_rows.push_back({lam, proj[2], dl_pred, std::abs(proj[2] - dl_pred)});
    vq_rows.push_back({lam, proj[3], vq_pred, std::abs(proj[3] - vq_pred)});
  }
  out.dq = finish(std::move(dq_rows));
  out.dlambda = finish(std::move(dl_rows));
  out.vq = finish(std::move(vq_rows));
  return out;
}

double bubble_identity_residual(const BubbleAnsatz& b, int n, double patch) {
  if (n < 4) throw InputError("identity check needs n >= 4");
  const double h = patch / n;
  const double Rs2 = b.core_scale() * b.core_scale();
  const double rho_h = b.rho1() * b.h_q();
  const auto U = [&](double dx, double dy) {
    return b.lambda() - 2.0 * std::log1p(Rs2 * (dx * dx + dy * dy));
  };
  double worst = 0.0;
  for (int j = 1; j < n; ++j)
    for (int i = 1; i < n; ++i) {
      const double dx = (i - n / 2) * h, dy = (j - n / 2) * h;
      const double u = U(dx, dy);
      const double lap =
          (U(dx + h, dy) + U(dx - h, dy) + U(dx, dy + h) + U(dx, dy - h) - 4.0 * u) / (h * h);
      worst = std::max(worst, std::abs(lap + rho_h * std::exp(u)));
    }
  return worst;
}

BilinearCheck bilinear_form_check(const BubbleAnsatz& b, const TorusGrid& g, int samples,
                                  unsigned long long seed) {
  if (samples < 1) throw InputError("bilinear check needs at least one sample");
  if (std::exp(-b.lambda() / 2.0) < 4.0 * g.spacing())
    throw ResolutionError("grid too coarse for the bubble core: e^{-lambda/2} < 4/n");
  const double lam = b.lambda();
  const double dl = 1e-5 * lam, dq = 1e-5;
  const Point q = b.q();
  std::vector<TorusField> basis;
  basis.push_back(assemble_vq(b.with_a(1.0), g));
  const auto diff = [&](const BubbleAnsatz& p, const BubbleAnsatz& m, double step) {
    return (assemble_vq(p.with_a(1.0), g) - assemble_vq(m.with_a(1.0), g)) * (0.5 / step);
  };
  basis.push_back(diff(b.with_q({q.x + dq, q.y}), b.with_q({q.x - dq, q.y}), dq));
  basis.push_back(diff(b.with_q({q.x, q.y + dq}), b.with_q({q.x, q.y - dq}), dq));
  basis.push_back(diff(lambda_shift(b, dl), lambda_shift(b, -dl), dl));

  // Gram-Schmidt in the Dirichlet inner product.
  const auto dinner = [](const TorusField& u, const TorusField& v) {
    return -torus::inner(u, torus::laplacian(v));
  };
  std::vector<TorusField> ortho;
  for (auto f : basis) {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& e : ortho) f -= e * dinner(f, e);
    const double nn = std::sqrt(dinner(f, f));
    if (nn > 1e-12) ortho.push_back(f * (1.0 / nn));
  }

  const double rho_h = b.rho1() * b.h_q();
  const TorusField weight = TorusField::sample(g, [&](Point x) {
    const double r = torus::distance(x, q);
    return r < b.r0() ? rho_h * std::exp(radial_profile(b, r).U) : 0.0;
  });

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  BilinearCheck out;
  out.min_ratio = INFINITY;
  for (int k = 0; k < samples; ++k) {
    std::vector<std::array<double, 4>> modes;
    for (int kx = -8; kx <= 8; ++kx)
      for (int ky = -8; ky <= 8; ++ky) {
        if ((kx == 0 && ky == 0) || kx * kx + ky * ky > 64) continue;
        modes.push_back({double(kx), double(ky), nd(rng), nd(rng)});
      }
    TorusField phi = TorusField::sample(g, [&](Point x) {
      double v = 0.0;
      for (const auto& m : modes) {
        const double arg = 2.0 * pi * (m[0] * x.x + m[1] * x.y);
        v += (m[2] * std::cos(arg) + m[3] * std::sin(arg)) / (m[0] * m[0] + m[1] * m[1]);
      }
      return v;
    });
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& e : ortho) phi -= e * dinner(phi, e);
    phi.project_mean_zero();
    const double energy = torus::dirichlet_energy(phi);
    const double B = energy - torus::inner(weight, torus::hadamard(phi, phi));
    const double ratio = B / (h1_norm(phi) * h1_norm(phi));
    out.ratios.push_back(ratio);
    out.min_ratio = std::min(out.min_ratio, ratio);
  }
  return out;
}

}  // namespace mfdeg::bubble
