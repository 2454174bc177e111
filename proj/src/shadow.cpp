#include "mfdeg/shadow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "mfdeg/errors.hpp"
#include "mfdeg/krylov.hpp"
#include "mfdeg/lattice_green.hpp"

namespace mfdeg::shadow {

using std::numbers::pi;

namespace {

constexpr int kDenseLimit = 48;

Eigen::Map<const Eigen::VectorXd> as_vec(const TorusField& f) {
  return {f.values().data(), static_cast<Eigen::Index>(f.grid().size())};
}

TorusField as_field(const TorusGrid& g, const Eigen::VectorXd& v, Eigen::Index offset = 0) {
  return TorusField(g, std::vector<double>(v.data() + offset, v.data() + offset + g.size()));
}

Vec2 field_gradient_at(const TorusField& f, Point p) {
  return torus::SpectralInterpolant(f).gradient(p);
}

Mat2 hessian_at_point(const ShadowState& s, const ShadowParams& params) {
  const Mat2 hl = log_function(params.h1)->hessian(s.p);
  if (params.coupling() == 0.0) return hl;
  const Mat2 hw = torus::SpectralInterpolant(s.w).hessian(s.p);
  Mat2 out;
  for (int i = 0; i < 4; ++i) out[i] = hl[i] - params.coupling() * hw[i];
  return out;
}

int count_negative(const Eigen::VectorXd& ev) {
  int k = 0;
  for (double e : ev)
    if (e < -1e-8) ++k;
  return k;
}

}  // namespace

ShadowParams::ShadowParams(double r2, SurfaceFunctionPtr a, TorusField b, bool dec)
    : rho2(r2), h1(std::move(a)), h2(std::move(b)), decoupled(dec) {
  if (!std::isfinite(rho2) || rho2 < 0.0) throw InputError("rho2 must be finite and >= 0");
  if (!h1) throw InputError("shadow system needs h1");
  if (h2.min() <= 0.0 || !h2.all_finite()) throw InputError("h2 must be positive and finite");
}

double ShadowResidual::gradient_norm() const {
  return std::max(std::abs(gradient[0]), std::abs(gradient[1]));
}

TorusField singular_weight(const ShadowState& s, const ShadowParams& params) {
  const TorusGrid& g = params.grid();
  if (!(s.w.grid() == g)) throw InputError("w and h2 live on different grids");
  TorusField Q(g);
  for (int iy = 0; iy < g.n(); ++iy)
    for (int ix = 0; ix < g.n(); ++ix) {
      const Vec2 d = torus::min_image(g.node(ix, iy), s.p);
      Q(ix, iy) = params.h2(ix, iy) * std::exp(s.w(ix, iy)) * torus::lattice_vanishing_weight(d);
    }
  return Q;
}

ShadowResidual shadow_residual(const ShadowState& s, const ShadowParams& params) {
  const TorusField Q = singular_weight(s, params);
  const double mass = torus::integrate(Q);
  ShadowResidual r{torus::laplacian(s.w) + (Q * (1.0 / mass)).map([&](double v) {
                     return params.rho2 * (v - 1.0);
                   }),
                   {}};
  const Vec2 gl = log_function(params.h1)->gradient(s.p);
  r.gradient = gl;
  if (params.coupling() != 0.0) {
    const Vec2 gw = field_gradient_at(s.w, s.p);
    r.gradient[0] -= params.coupling() * gw[0];
    r.gradient[1] -= params.coupling() * gw[1];
  }
  return r;
}

ShadowLinearization::ShadowLinearization(const ShadowState& s, const ShadowParams& params)
    : grid_(params.grid()),
      rho2_(params.rho2),
      coupling_(params.coupling()),
      p_(s.p),
      P_(grid_),
      Px_(grid_),
      Py_(grid_) {
  const TorusField Q = singular_weight(s, params);
  P_ = Q * (1.0 / torus::integrate(Q));
  for (int iy = 0; iy < grid_.n(); ++iy)
    for (int ix = 0; ix < grid_.n(); ++ix) {
      const double Pv = P_(ix, iy);
      if (Pv == 0.0) continue;
      const Vec2 dG = torus::lattice_green_gradient(torus::min_image(grid_.node(ix, iy), p_));
      Px_(ix, iy) = Pv * 8.0 * pi * dG[0];
      Py_(ix, iy) = Pv * 8.0 * pi * dG[1];
    }
  hess_ = hessian_at_point(s, params);
}

TorusField ShadowLinearization::apply_field_block(const TorusField& phi) const {
  const TorusField Pphi = torus::hadamard(P_, phi);
  return torus::laplacian(phi) + (Pphi - P_ * torus::integrate(Pphi)) * rho2_;
}

ShadowResidual ShadowLinearization::apply(const TorusField& phi, Vec2 nu) const {
  TorusField f = apply_field_block(phi);
  const TorusField T = Px_ * nu[0] + Py_ * nu[1];
  f += (T - P_ * torus::integrate(T)) * rho2_;
  ShadowResidual r{std::move(f), {hess_[0] * nu[0] + hess_[1] * nu[1],
                                  hess_[2] * nu[0] + hess_[3] * nu[1]}};
  if (coupling_ != 0.0) {
    const Vec2 gp = field_gradient_at(phi, p_);
    r.gradient[0] -= coupling_ * gp[0];
    r.gradient[1] -= coupling_ * gp[1];
  }
  return r;
}

Eigen::MatrixXd ShadowLinearization::dense() const {
  if (grid_.n() > kDenseLimit)
    throw InputError("dense shadow linearisation needs n <= 48, got n = " +
                     std::to_string(grid_.n()));
  const Eigen::Index N = static_cast<Eigen::Index>(grid_.size());
  const double s = grid_.spacing();  // sqrt of the cell area
  Eigen::MatrixXd A(N + 2, N + 2);
  TorusField e(grid_);
  for (Eigen::Index j = 0; j < N + 2; ++j) {
    Vec2 nu{0.0, 0.0};
    if (j < N) {
      e[static_cast<std::size_t>(j)] = 1.0 / s;
    } else {
      nu[j - N] = 1.0;
    }
    const ShadowResidual r = apply(e, nu);
    A.col(j).head(N) = as_vec(r.field) * s;
    A(N, j) = r.gradient[0];
    A(N + 1, j) = r.gradient[1];
    if (j < N) e[static_cast<std::size_t>(j)] = 0.0;
  }
  // constants are annihilated on input and absent from the range; map the
  // constant mode to shift * itself so it never sets the smallest value
  const double shift = 1.0 + A.cwiseAbs().rowwise().sum().maxCoeff();
  A.topLeftCorner(N, N).array() += shift / static_cast<double>(N);
  return A;
}

double ShadowLinearization::smallest_singular_value() const {
  const Eigen::MatrixXd A = dense();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(A);
  return svd.singularValues().minCoeff();
}

int ShadowLinearization::morse_sign() const {
  if (grid_.n() > kDenseLimit)
    throw InputError("Morse sign needs n <= 48, got n = " + std::to_string(grid_.n()));
  const Eigen::Index N = static_cast<Eigen::Index>(grid_.size());
  Eigen::MatrixXd A(N, N);
  TorusField e(grid_);
  for (Eigen::Index j = 0; j < N; ++j) {
    e[static_cast<std::size_t>(j)] = 1.0;
    A.col(j) = -as_vec(apply_field_block(e));
    e[static_cast<std::size_t>(j)] = 0.0;
  }
  A = 0.5 * (A + A.transpose()).eval();
  const double shift = 1.0 + A.cwiseAbs().rowwise().sum().maxCoeff();
  A.array() += shift / static_cast<double>(N);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw ConvergenceError("dense eigensolve failed");
  Eigen::Matrix2d H;
  H << -hess_[0], -hess_[1], -hess_[2], -hess_[3];
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> hs(0.5 * (H + H.transpose()));
  const int neg = count_negative(es.eigenvalues()) + count_negative(hs.eigenvalues());
  return neg % 2 == 0 ? 1 : -1;
}

ShadowReport shadow_newton(const ShadowState& start, const ShadowParams& params,
                           const ShadowOptions& opts) {
  const TorusGrid& g = params.grid();
  if (!start.w.is_mean_zero()) throw InputError("shadow start w must be mean-zero");
  const Eigen::Index N = static_cast<Eigen::Index>(g.size());
  const double sc = g.spacing();

  const auto pack = [&](const ShadowResidual& r) {
    Eigen::VectorXd v(N + 2);
    v.head(N) = as_vec(r.field) * sc;
    v[N] = r.gradient[0];
    v[N + 1] = r.gradient[1];
    return v;
  };
  const auto unpack_field = [&](const Eigen::VectorXd& v) {
    TorusField f = as_field(g, v) * (1.0 / sc);
    f.project_mean_zero();
    return f;
  };

  ShadowState s{start.w, torus::wrap(start.p)};
  ShadowResidual r = shadow_residual(s, params);
  ShadowReport rep;
  const auto converged = [&](const ShadowResidual& x) {
    return x.field_norm() <= opts.tol && x.gradient_norm() <= opts.tol;
  };
  int it = 0;
  for (; it < opts.max_iter && !converged(r); ++it) {
    const ShadowLinearization J(s, params);
    const Mat2& H = J.point_hessian();
    const double det = H[0] * H[3] - H[1] * H[2];
    const LinearOperator A = [&](const Eigen::VectorXd& v) {
      return pack(J.apply(unpack_field(v), {v[N], v[N + 1]}));
    };
    const LinearOperator M = [&](const Eigen::VectorXd& v) {
      Eigen::VectorXd out(N + 2);
      TorusField f = as_field(g, v) * (1.0 / sc);
      f.project_mean_zero();
      out.head(N) = as_vec(torus::poisson_solve(f)) * sc;
      if (std::abs(det) > 1e-12) {
        out[N] = (H[3] * v[N] - H[1] * v[N + 1]) / det;
        out[N + 1] = (-H[2] * v[N] + H[0] * v[N + 1]) / det;
      } else {
        out.tail(2) = v.tail(2);
      }
      return out;
    };
    const Eigen::VectorXd rhs = -pack(r);
    const GmresResult step = gmres(A, rhs, M, opts.gmres_tol, opts.gmres_max_iter);
    const TorusField dw = unpack_field(step.x);
    const Vec2 dp{step.x[N], step.x[N + 1]};

    const double f0 = rhs.norm();
    double t = 1.0;
    bool accepted = false;
    for (; t >= 1.0 / 1024; t *= 0.5) {
      ShadowState trial{s.w + dw * t, torus::wrap({s.p.x + t * dp[0], s.p.y + t * dp[1]})};
      trial.w.project_mean_zero();
      if (!trial.w.all_finite()) continue;
      ShadowResidual rt = shadow_residual(trial, params);
      if (pack(rt).norm() <= (1.0 - 1e-4 * t) * f0 || converged(rt)) {
        s = std::move(trial);
        r = std::move(rt);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  rep.iterations = it;
  rep.field_residual = r.field_norm();
  rep.gradient_residual = r.gradient_norm();
  rep.converged = converged(r);
  rep.state = s;
  if (!rep.converged)
    throw ConvergenceError("shadow Newton stalled: field residual " +
                           std::to_string(rep.field_residual) + ", gradient residual " +
                           std::to_string(rep.gradient_residual));
  if (opts.certify && g.n() <= kDenseLimit) {
    const ShadowLinearization J(s, params);
    rep.smallest_singular_value = J.smallest_singular_value();
    rep.degenerate = *rep.smallest_singular_value < kNonDegeneracy;
    if (!rep.degenerate) rep.morse_sign = J.morse_sign();
  }
  return rep;
}

int morse_census(const std::vector<ShadowReport>& reports) {
  int sum = 0;
  for (const auto& r : reports) {
    if (r.degenerate || r.morse_sign == 0)
      throw InputError("census refused: a report is degenerate or uncertified");
    sum += r.morse_sign;
  }
  return sum;
}

std::vector<ShadowReport> solve_from_starts(const std::vector<Point>& starts,
                                            const ShadowParams& params,
                                            const ShadowOptions& opts) {
  std::vector<ShadowReport> out;
  for (const Point& p : starts) {
    ShadowReport rep;
    try {
      rep = shadow_newton({TorusField(params.grid()), p}, params, opts);
    } catch (const ConvergenceError&) {
      continue;
    }
    const bool dup = std::any_of(out.begin(), out.end(), [&](const ShadowReport& o) {
      return torus::distance(o.state.p, rep.state.p) < 1e-6;
    });
    if (!dup) out.push_back(std::move(rep));
  }
  return out;
}

double vanishing_exponent(const ShadowState& s, const ShadowParams& params, double r_min,
                          double r_max) {
  if (!(r_min > 0.0 && r_max > r_min)) throw InputError("need 0 < r_min < r_max");
  const torus::SpectralInterpolant w(s.w), h2(params.h2);
  std::vector<double> lx, ly;
  constexpr int radii = 12, dirs = 8;
  for (int k = 0; k < radii; ++k) {
    const double r = r_min * std::pow(r_max / r_min, k / double(radii - 1));
    double acc = 0.0;
    for (int j = 0; j < dirs; ++j) {
      const double th = 2.0 * pi * (j + 0.5) / dirs;
      const Vec2 d{r * std::cos(th), r * std::sin(th)};
      const Point x{s.p.x + d[0], s.p.y + d[1]};
      acc += std::log(h2.value(x)) + w.value(x) + std::log(torus::lattice_vanishing_weight(d));
    }
    lx.push_back(std::log(r));
    ly.push_back(acc / dirs);
  }
  const double n = radii;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int k = 0; k < radii; ++k) {
    sx += lx[k];
    sy += ly[k];
    sxx += lx[k] * lx[k];
    sxy += lx[k] * ly[k];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace mfdeg::shadow
