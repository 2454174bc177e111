#include "mfdeg/mf_solver.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "mfdeg/errors.hpp"
#include "mfdeg/krylov.hpp"

namespace mfdeg::solver {

namespace {

constexpr double kBlowUpGuard = 50.0;
constexpr double kOverflow = 700.0;
constexpr int kDenseLimit = 48;

Eigen::Map<const Eigen::VectorXd> as_vec(const TorusField& f) {
  return {f.values().data(), static_cast<Eigen::Index>(f.grid().size())};
}

TorusField as_field(const TorusGrid& g, const Eigen::VectorXd& v) {
  return TorusField(g, std::vector<double>(v.data(), v.data() + v.size()));
}

void check_overflow(const TorusField& u) {
  if (!u.all_finite() || u.norm_inf() > kOverflow)
    throw BlowUpError("exponential overflow: |u| exceeds 700");
}

// h e^{s u} / integral, computed with the maximum factored out
TorusField normalised(const TorusField& h, const TorusField& u, double s) {
  const double top = s > 0 ? u.max() : -u.min();
  TorusField out(u.grid());
  long double total = 0.0L;
  for (std::size_t i = 0; i < out.grid().size(); ++i) {
    out[i] = h[i] * std::exp(s * u[i] - top);
    total += out[i];
  }
  const double mean = static_cast<double>(total / out.grid().size());
  return out *= 1.0 / mean;
}

// P phi - P <P, phi>
TorusField density_kernel(const TorusField& P, const TorusField& phi) {
  const double m = integrate(hadamard(P, phi));
  TorusField out = hadamard(P, phi);
  out -= P * m;
  return out;
}

Eigen::MatrixXd dense_laplacian(const TorusGrid& g) {
  // circulant: column j is the Laplacian of a unit spike at node j
  const int n = g.n();
  const std::size_t N = g.size();
  TorusField spike(g);
  spike[0] = 1.0;
  const TorusField col0 = laplacian(spike);
  Eigen::MatrixXd A(N, N);
  for (int jy = 0; jy < n; ++jy)
    for (int jx = 0; jx < n; ++jx) {
      const std::size_t j = g.index(jx, jy);
      for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix)
          A(g.index(ix, iy), j) = col0((ix - jx + n) % n, (iy - jy + n) % n);
    }
  return A;
}

// rho (diag P - P P^T / N)
void add_density_block(Eigen::MatrixXd& A, const TorusField& P, double rho) {
  const auto p = as_vec(P);
  const double N = static_cast<double>(p.size());
  A.diagonal() += rho * p;
  A.noalias() -= (rho / N) * p * p.transpose();
}

// Ascending eigenvalues of -A restricted to mean-zero vectors. A is
// symmetric and annihilates constants; the constant direction is pushed to
// the top of the spectrum by a Gershgorin shift and dropped.
std::vector<double> mean_zero_spectrum(Eigen::MatrixXd A) {
  A = -A;
  const Eigen::Index N = A.rows();
  const double shift = 1.0 + A.cwiseAbs().rowwise().sum().maxCoeff();
  A.array() += shift / static_cast<double>(N);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw ConvergenceError("dense eigensolve failed");
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + N);
  ev.pop_back();
  return ev;
}

void require_dense_size(const TorusGrid& g) {
  if (g.n() > kDenseLimit)
    throw InputError("dense linearisation spectra need n <= 48, got n = " +
                     std::to_string(g.n()));
}

int count_negative(const std::vector<double>& ev) {
  return static_cast<int>(std::count_if(ev.begin(), ev.end(),
                                        [](double l) { return l < -kEigTolerance; }));
}

struct NewtonProblem {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residual;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> jacobian;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> precond;
  std::function<double(const Eigen::VectorXd&)> max_u;
  std::function<double(const Eigen::VectorXd&)> sup_norm;
};

struct NewtonOutcome {
  Eigen::VectorXd x;
  double residual = 0.0;
  int iters = 0;
  bool converged = false;
  std::vector<double> history;
};

NewtonOutcome damped_newton(const NewtonProblem& prob, Eigen::VectorXd x,
                            const SolverOptions& opts) {
  if (prob.max_u(x) > kBlowUpGuard)
    throw BlowUpError("initial iterate exceeds the blow-up guard max u > 50");
  NewtonOutcome out;
  Eigen::VectorXd F = prob.residual(x);
  for (;;) {
    out.residual = prob.sup_norm(F);
    out.history.push_back(out.residual);
    if (out.residual <= opts.tol) {
      out.converged = true;
      break;
    }
    if (out.iters >= opts.max_iter) break;

    const Eigen::VectorXd rhs = -F;
    auto A = [&](const Eigen::VectorXd& v) { return prob.jacobian(x, v); };
    const GmresResult step =
        gmres(A, rhs, prob.precond, opts.gmres_tol, opts.gmres_max_iter);

    // Armijo backtracking on |F|^2
    const double f0 = F.squaredNorm();
    bool accepted = false, guard_hit = false;
    for (double t = 1.0; t >= 1.0 / 1024.0; t *= 0.5) {
      Eigen::VectorXd trial = x + t * step.x;
      if (prob.max_u(trial) > kBlowUpGuard) {
        guard_hit = true;
        continue;
      }
      Eigen::VectorXd Ft = prob.residual(trial);
      if (Ft.squaredNorm() <= (1.0 - 2e-4 * t) * f0) {
        x = std::move(trial);
        F = std::move(Ft);
        accepted = true;
        break;
      }
    }
    ++out.iters;
    if (!accepted) {
      if (guard_hit) throw BlowUpError("Newton iterate exceeds the blow-up guard max u > 50");
      break;
    }
  }
  out.x = std::move(x);
  return out;
}

}  // namespace

ProblemParams::ProblemParams(double r1, double r2, TorusField a, TorusField b)
    : rho1(r1), rho2(r2), h1(std::move(a)), h2(std::move(b)) {
  if (!(rho1 > 0.0) || !std::isfinite(rho1)) throw InputError("rho1 must be positive and finite");
  if (!(rho2 >= 0.0) || !std::isfinite(rho2)) throw InputError("rho2 must be non-negative and finite");
  if (!(h1.grid() == h2.grid())) throw InputError("h1 and h2 live on different grids");
  if (!(h1.min() > 0.0) || !(h2.min() > 0.0)) throw InputError("h1 and h2 must be strictly positive");
  if (!h1.all_finite() || !h2.all_finite()) throw InputError("h1 and h2 must be finite");
}

std::pair<TorusField, TorusField> densities(const TorusField& u, const ProblemParams& params) {
  check_overflow(u);
  return {normalised(params.h1, u, 1.0), normalised(params.h2, u, -1.0)};
}

TorusField residual_scalar(const TorusField& u, const ProblemParams& params) {
  auto [P1, P2] = densities(u, params);
  TorusField F = laplacian(u);
  F += (P1 - TorusField(u.grid(), 1.0)) * params.rho1;
  F -= (P2 - TorusField(u.grid(), 1.0)) * params.rho2;
  return F.project_mean_zero();
}

std::pair<TorusField, TorusField> residual_system(const TorusField& v1, const TorusField& v2,
                                                  const ProblemParams& params) {
  auto [P1, P2] = densities(v1 - v2, params);
  const TorusField one(v1.grid(), 1.0);
  TorusField F1 = laplacian(v1) + (P1 - one) * params.rho1;
  TorusField F2 = laplacian(v2) + (P2 - one) * params.rho2;
  F1.project_mean_zero();
  F2.project_mean_zero();
  return {std::move(F1), std::move(F2)};
}

TorusField jacobian_scalar(const TorusField& u, const ProblemParams& params, const TorusField& phi) {
  auto [P1, P2] = densities(u, params);
  TorusField out = laplacian(phi);
  out += density_kernel(P1, phi) * params.rho1;
  out += density_kernel(P2, phi) * params.rho2;
  return out.project_mean_zero();
}

std::pair<TorusField, TorusField> jacobian_system(const TorusField& v1, const TorusField& v2,
                                                  const ProblemParams& params,
                                                  const TorusField& phi1, const TorusField& phi2) {
  auto [P1, P2] = densities(v1 - v2, params);
  const TorusField d = phi1 - phi2;
  TorusField J1 = laplacian(phi1) + density_kernel(P1, d) * params.rho1;
  TorusField J2 = laplacian(phi2) - density_kernel(P2, d) * params.rho2;
  J1.project_mean_zero();
  J2.project_mean_zero();
  return {std::move(J1), std::move(J2)};
}

std::pair<TorusField, TorusField> decompose(const TorusField& u, const ProblemParams& params) {
  auto [P1, P2] = densities(u, params);
  TorusField rhs = (P1 - TorusField(u.grid(), 1.0)) * (-params.rho1);
  rhs.project_mean_zero();
  TorusField v1 = poisson_solve(rhs);
  TorusField v2 = v1 - u;
  return {std::move(v1), std::move(v2)};
}

SolveReport newton_scalar(const TorusField& u0, const ProblemParams& params, const SolverOptions& opts) {
  const TorusGrid g = params.grid();
  if (!(u0.grid() == g)) throw InputError("initial field grid does not match h1");
  NewtonProblem prob;
  prob.residual = [&](const Eigen::VectorXd& x) {
    return Eigen::VectorXd(as_vec(residual_scalar(as_field(g, x), params)));
  };
  prob.jacobian = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
    return Eigen::VectorXd(as_vec(jacobian_scalar(as_field(g, x), params, as_field(g, v))));
  };
  prob.precond = [&](const Eigen::VectorXd& v) {
    TorusField f = as_field(g, v);
    return Eigen::VectorXd(as_vec(poisson_solve(f.project_mean_zero())));
  };
  prob.max_u = [](const Eigen::VectorXd& x) { return x.maxCoeff(); };
  prob.sup_norm = [](const Eigen::VectorXd& x) { return x.cwiseAbs().maxCoeff(); };

  TorusField start = u0;
  start.project_mean_zero();
  NewtonOutcome res = damped_newton(prob, as_vec(start), opts);

  SolveReport rep;
  TorusField u = as_field(g, res.x);
  u.project_mean_zero();
  rep.fields.push_back(u);
  rep.residual_norm = res.residual;
  rep.newton_iters = res.iters;
  rep.converged = res.converged;
  rep.history = std::move(res.history);
  if (opts.compute_morse && rep.converged && g.n() <= kDenseLimit)
    rep.neg_eigs = morse_count_scalar(u, params);
  return rep;
}

SolveReport newton_system(const TorusField& v10, const TorusField& v20, const ProblemParams& params,
                          const SolverOptions& opts) {
  const TorusGrid g = params.grid();
  const Eigen::Index N = static_cast<Eigen::Index>(g.size());
  auto split = [&](const Eigen::VectorXd& x) {
    return std::pair{as_field(g, x.head(N)), as_field(g, x.tail(N))};
  };
  auto join = [&](const TorusField& a, const TorusField& b) {
    Eigen::VectorXd x(2 * N);
    x.head(N) = as_vec(a);
    x.tail(N) = as_vec(b);
    return x;
  };
  NewtonProblem prob;
  prob.residual = [&](const Eigen::VectorXd& x) {
    auto [a, b] = split(x);
    auto [F1, F2] = residual_system(a, b, params);
    return join(F1, F2);
  };
  prob.jacobian = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
    auto [a, b] = split(x);
    auto [p, q] = split(v);
    auto [J1, J2] = jacobian_system(a, b, params, p, q);
    return join(J1, J2);
  };
  prob.precond = [&](const Eigen::VectorXd& v) {
    auto [p, q] = split(v);
    return join(poisson_solve(p.project_mean_zero()), poisson_solve(q.project_mean_zero()));
  };
  // the guard applies to u = v1 - v2
  prob.max_u = [N](const Eigen::VectorXd& x) { return (x.head(N) - x.tail(N)).maxCoeff(); };
  prob.sup_norm = [](const Eigen::VectorXd& x) { return x.cwiseAbs().maxCoeff(); };

  TorusField a = v10, b = v20;
  a.project_mean_zero();
  b.project_mean_zero();
  NewtonOutcome res = damped_newton(prob, join(a, b), opts);

  SolveReport rep;
  auto [v1, v2] = split(res.x);
  v1.project_mean_zero();
  v2.project_mean_zero();
  rep.fields = {v1, v2};
  rep.residual_norm = res.residual;
  rep.newton_iters = res.iters;
  rep.converged = res.converged;
  rep.history = std::move(res.history);
  if (opts.compute_morse && rep.converged && g.n() <= kDenseLimit)
    rep.neg_eigs = morse_count_system(v1, v2, params);
  return rep;
}

std::vector<double> linearized_spectrum_scalar(const TorusField& u, const ProblemParams& params) {
  const TorusGrid g = params.grid();
  require_dense_size(g);
  auto [P1, P2] = densities(u, params);
  Eigen::MatrixXd L = dense_laplacian(g);
  add_density_block(L, P1, params.rho1);
  add_density_block(L, P2, params.rho2);
  return mean_zero_spectrum(std::move(L));
}

std::vector<double> linearized_spectrum_system(const TorusField& v1, const TorusField& v2,
                                               const ProblemParams& params) {
  const TorusGrid g = params.grid();
  require_dense_size(g);
  const Eigen::Index N = static_cast<Eigen::Index>(g.size());
  // Assemble the block Jacobian column by column in the coordinates
  // psi = phi1 - phi2, chi = phi1 + phi2, where it is block lower triangular.
  Eigen::MatrixXd top_left(N, N), bottom_right(N, N);
  double upper_right = 0.0, scale = 0.0;
  for (Eigen::Index j = 0; j < N; ++j) {
    TorusField e(g);
    e[static_cast<std::size_t>(j)] = 0.5;
    auto [a1, a2] = jacobian_system(v1, v2, params, e, -e);  // psi column
    auto [b1, b2] = jacobian_system(v1, v2, params, e, e);   // chi column
    top_left.col(j) = as_vec(a1) - as_vec(a2);
    bottom_right.col(j) = as_vec(b1) + as_vec(b2);
    upper_right = std::max(upper_right, (as_vec(b1) - as_vec(b2)).cwiseAbs().maxCoeff());
    scale = std::max(scale, top_left.col(j).cwiseAbs().maxCoeff());
  }
  std::vector<double> ev;
  if (upper_right <= 1e-10 * scale) {
    ev = mean_zero_spectrum((top_left + top_left.transpose()) * 0.5);
    auto lap = mean_zero_spectrum((bottom_right + bottom_right.transpose()) * 0.5);
    ev.insert(ev.end(), lap.begin(), lap.end());
  } else {
    // general case: full nonsymmetric spectrum, real parts
    Eigen::MatrixXd J(2 * N, 2 * N);
    for (Eigen::Index j = 0; j < N; ++j) {
      TorusField e(g);
      e[static_cast<std::size_t>(j)] = 1.0;
      auto [c1, c2] = jacobian_system(v1, v2, params, e, TorusField(g));
      auto [d1, d2] = jacobian_system(v1, v2, params, TorusField(g), e);
      J.col(j) << as_vec(c1), as_vec(c2);
      J.col(N + j) << as_vec(d1), as_vec(d2);
    }
    J = -J;
    for (int blk = 0; blk < 2; ++blk)
      J.block(blk * N, blk * N, N, N).array() += 1.0;  // lift both constant modes
    Eigen::EigenSolver<Eigen::MatrixXd> es(J, false);
    if (es.info() != Eigen::Success) throw ConvergenceError("nonsymmetric eigensolve failed");
    for (Eigen::Index i = 0; i < 2 * N; ++i) ev.push_back(es.eigenvalues()(i).real());
  }
  std::sort(ev.begin(), ev.end());
  return ev;
}

int morse_count_scalar(const TorusField& u, const ProblemParams& params) {
  return count_negative(linearized_spectrum_scalar(u, params));
}

int morse_count_system(const TorusField& v1, const TorusField& v2, const ProblemParams& params) {
  return count_negative(linearized_spectrum_system(v1, v2, params));
}

std::pair<double, double> local_mass(const TorusField& u, const ProblemParams& params, Point p,
                                     double r) {
  if (!(r > 0.0) || r > std::sqrt(0.5) + 1e-15)
    throw InputError("local mass radius must lie in (0, sqrt(2)/2]");
  auto [P1, P2] = densities(u, params);
  const TorusGrid& g = params.grid();
  const double h = g.spacing();
  const double half_diag = h * std::sqrt(0.5);
  constexpr int sub = 8;
  long double m1 = 0.0L, m2 = 0.0L;
  for (int iy = 0; iy < g.n(); ++iy)
    for (int ix = 0; ix < g.n(); ++ix) {
      const Point x = g.node(ix, iy);
      const double d = torus::distance(x, p);
      double cover;
      if (d > r + half_diag) continue;
      if (d <= r - half_diag) {
        cover = 1.0;
      } else {
        int hits = 0;
        for (int a = 0; a < sub; ++a)
          for (int b = 0; b < sub; ++b) {
            const Point s{x.x + ((a + 0.5) / sub - 0.5) * h, x.y + ((b + 0.5) / sub - 0.5) * h};
            if (torus::distance(s, p) <= r) ++hits;
          }
        cover = hits / double(sub * sub);
      }
      m1 += cover * P1(ix, iy);
      m2 += cover * P2(ix, iy);
    }
  const double area = g.cell_area();
  const double two_pi = 2.0 * std::numbers::pi;
  return {params.rho1 * static_cast<double>(m1) * area / two_pi,
          params.rho2 * static_cast<double>(m2) * area / two_pi};
}

Point argmax(const TorusField& f) {
  const auto v = f.values();
  const auto i = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  const int n = f.grid().n();
  return f.grid().node(static_cast<int>(i % n), static_cast<int>(i / n));
}

ContinuationResult continue_rho1(const TorusField& start, const ProblemParams& params,
                                 const std::vector<double>& rho1_targets,
                                 const ContinuationOptions& opts) {
  ContinuationResult out;
  auto record = [&](double rho1, SolveReport rep) {
    ProblemParams pp(rho1, params.rho2, params.h1, params.h2);
    const TorusField& u = rep.fields.front();
    ContinuationPoint pt;
    pt.rho1 = rho1;
    pt.rho2 = params.rho2;
    pt.max_u = u.max();
    const Point c = opts.track_max ? argmax(u) : opts.mass_center;
    std::tie(pt.sigma1, pt.sigma2) = local_mass(u, pp, c, opts.mass_radius);
    pt.report = std::move(rep);
    out.points.push_back(std::move(pt));
  };

  SolverOptions nopts = opts.newton;
  nopts.compute_morse = nopts.compute_morse && params.grid().n() <= kDenseLimit;
  SolveReport first = newton_scalar(start, params, nopts);
  if (!first.converged) throw ConvergenceError("continuation start is not a converged solution");
  TorusField u = first.fields.front();
  double rho = params.rho1;
  record(rho, std::move(first));

  double step = opts.initial_step;
  for (double target : rho1_targets) {
    while (rho != target) {
      if (step < opts.min_step) return out;
      const double dir = target > rho ? 1.0 : -1.0;
      const double next = std::abs(target - rho) <= step ? target : rho + dir * step;
      std::optional<SolveReport> rep;
      try {
        ProblemParams pp(next, params.rho2, params.h1, params.h2);
        rep = newton_scalar(u, pp, nopts);
      } catch (const BlowUpError&) {
        out.blew_up = true;
      }
      if (rep && rep->converged) {
        out.blew_up = false;
        u = rep->fields.front();
        rho = next;
        record(rho, std::move(*rep));
        step = std::min(opts.initial_step, step * 1.5);
      } else {
        step *= 0.5;
      }
    }
  }
  out.completed = true;
  return out;
}

}  // namespace mfdeg::solver
