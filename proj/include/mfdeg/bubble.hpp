#pragma once

// Concentrating profile around a point q of the torus: standard bubble U,
// the correction terms H, J, eta, the constants s, t, the approximate
// solution v_q and quadrature checks of the mass and projection expansions.
// Green function values come from the closed-form lattice series.

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "mfdeg/surface_function.hpp"
#include "mfdeg/torus.hpp"

namespace mfdeg::bubble {

using torus::Point;
using torus::TorusField;
using torus::TorusGrid;
using torus::Vec2;

class BubbleAnsatz {
 public:
  /// h = h1 e^{-w}; w may be absent (w = 0). r0 is the inner cutoff radius.
  BubbleAnsatz(Point q, double lambda, double a, double rho1, SurfaceFunctionPtr h1,
               std::optional<TorusField> w = std::nullopt, double r0 = 0.125);

  BubbleAnsatz with_q(Point q) const;
  BubbleAnsatz with_lambda(double lambda) const;
  BubbleAnsatz with_a(double a) const;

  Point q() const { return q_; }
  double lambda() const { return lambda_; }
  double a() const { return a_; }
  double rho1() const { return rho1_; }
  double r0() const { return r0_; }

  /// log h at x, with h = h1 e^{-w}.
  double log_h(Point x) const { return log_h_->value(x); }
  const SurfaceFunctionPtr& log_h_function() const { return log_h_; }
  const std::optional<TorusField>& w() const { return w_; }
  double h_q() const { return h_q_; }
  /// grad H(q) = grad log h(q) (R(., q) - R(q, q) has zero gradient at q).
  Vec2 grad_H_q() const { return grad_log_h_q_; }
  /// Lap H(q) = Lap log h(q) + 8 pi + |grad log h(q)|^2.
  double lap_H_q() const { return lap_H_q_; }
  /// rho1 h(q) / 8.
  double c() const { return rho1_ * h_q_ / 8.0; }
  /// sqrt(rho1 h(q) e^lambda / 8), the inverse core radius.
  double core_scale() const;

 private:
  friend BubbleAnsatz lambda_shift(const BubbleAnsatz&, double);
  SurfaceFunctionPtr h1_;
  Point q_;
  double lambda_, a_, rho1_, r0_;
  std::optional<TorusField> w_;
  SurfaceFunctionPtr log_h_;
  double h_q_ = 0.0;
  Vec2 grad_log_h_q_{};
  double lap_H_q_ = 0.0;
};

/// Quintic smoothstep cutoff: 1 on [0, r0], 0 beyond 2 r0.
double cutoff(double r, double r0);

double standard_bubble_U(Point x, const BubbleAnsatz& b);
double H_function(Point x, const BubbleAnsatz& b);
double J_function(Point x, const BubbleAnsatz& b);
/// -(8 Lap H(q) / rho1 h(q)) e^-lambda (log(R |x - q| + 2))^2, unnormalised.
double eta_leading(Point x, const BubbleAnsatz& b);

/// lambda + 2 log(rho1 h(q)/8) + 8 pi R(q,q) + 2 Lap H(q) lambda^2 e^-lambda / (rho1 h(q)).
double s_formula(double lambda, double rho1_h_q, double R_qq, double lap_H_q);
double s_value(const BubbleAnsatz& b);
/// Mean of v_q over the torus (radial quadrature).
double vq_mean(const BubbleAnsatz& b);
double t_value(const BubbleAnsatz& b);

/// v_q at x (not mean-subtracted, a not applied).
double vq_value(Point x, const BubbleAnsatz& b);
/// Pointwise Laplacian of v_q away from q.
double vq_laplacian(Point x, const BubbleAnsatz& b);
/// a (v_q - mean v_q) sampled on the grid.
TorusField assemble_vq(const BubbleAnsatz& b, const TorusGrid& g);

/// Lap log h1(p) - rho2 + 8 pi (flat torus, zero curvature).
double l_of_p(Point p, double rho2, const SurfaceFunction& h1);
/// Large root of lambda e^-lambda = (rho1 - 8 pi) h(p) / (2 l).
double lambda_of_rho1(double rho1, double l, double h_p);
double rho1_of_lambda(double lambda, double l, double h_p);

struct Membership {
  bool first = false;
  bool second = false;
};

/// Checks (v1, v2) against the neighbourhoods around (v_{q,lambda,a}, w),
/// with the ansatz parameters supplied by the caller.
Membership membership_S(const TorusField& v1, const TorusField& v2, const BubbleAnsatz& b,
                        const TorusField& w, double c1, Point p, double lambda_rho1);

double h1_norm(const TorusField& f);
/// W^{2,4} norm from spectral derivatives.
double w24_norm(const TorusField& f);

/// Heuristic (q, lambda, a) from a field: argmax, peak height, far-field
/// amplitude against 8 pi G.
BubbleAnsatz fit_ansatz(const TorusField& v1, double rho1, SurfaceFunctionPtr h1,
                        std::optional<TorusField> w = std::nullopt);

struct ExpansionRow {
  double lambda = 0.0;
  double measured = 0.0;
  double predicted = 0.0;
  double residual = 0.0;
};

struct ExpansionCheck {
  std::vector<ExpansionRow> rows;
  double fitted_exponent = 0.0;  // -slope of log(residual) against lambda
};

/// Least-squares -d log(y)/d lambda.
double fit_decay_exponent(const std::vector<double>& lambdas, const std::vector<double>& values);

enum class Quadrature { Polar, Grid };

struct QuadratureOptions {
  Quadrature kind = Quadrature::Polar;
  int grid_n = 256;  // for Quadrature::Grid
};

/// Integral of f over the torus by polar Gauss panels centred at q (log-graded
/// towards q) or by the uniform grid. The grid path raises ResolutionError
/// when e^{-lambda/2} < 4 / n.
double integrate_around(const BubbleAnsatz& b, const std::function<double(Point, double)>& f,
                        const QuadratureOptions& opts = {});

/// Mass expansion at a = 1 and zero perturbations.
ExpansionCheck mass_expansion_check(const BubbleAnsatz& base, const std::vector<double>& lambdas,
                                    const QuadratureOptions& opts = {});

struct ProjectionChecks {
  ExpansionCheck dq;       // measured / predicted are Euclidean norms
  ExpansionCheck dlambda;
  ExpansionCheck vq;
  std::vector<Vec2> dq_measured;
  std::vector<Vec2> dq_predicted;
};

/// Projections of the residual of v1 + T1 on the tangent directions of the
/// ansatz family at a = 1 and zero perturbations.
ProjectionChecks projection_checks(const BubbleAnsatz& base, const std::vector<double>& lambdas);

/// Max of |Lap_h U + rho1 h(q) e^U| over a square patch of side `patch`
/// centred at q with the 5-point Laplacian at spacing patch / n.
double bubble_identity_residual(const BubbleAnsatz& b, int n, double patch = 0.25);

struct BilinearCheck {
  std::vector<double> ratios;  // B(phi, phi) / |phi|_{H1}^2
  double min_ratio = 0.0;
};

/// Samples the quadratic form on random fields made H1-orthogonal to v_q,
/// d_q v_q and d_lambda v_q.
BilinearCheck bilinear_form_check(const BubbleAnsatz& b, const TorusGrid& g, int samples,
                                  unsigned long long seed);

}  // namespace mfdeg::bubble
