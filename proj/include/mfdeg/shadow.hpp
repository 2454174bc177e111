#pragma once

// Shadow system for (w, p): w mean-zero on the torus and p a point,
//   Lap w + rho2 (h2 e^{w - 8 pi G(., p)} / int h2 e^{w - 8 pi G(., p)} - 1) = 0,
//   grad (log h1 - (1 - t) w)(p) = 0,
// with t = 0 for the coupled system and t = 1 for the decoupled endpoint.

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "mfdeg/surface_function.hpp"
#include "mfdeg/torus.hpp"

namespace mfdeg::shadow {

using torus::Mat2;
using torus::Point;
using torus::TorusField;
using torus::TorusGrid;
using torus::Vec2;

struct ShadowParams {
  double rho2 = 0.0;
  SurfaceFunctionPtr h1;
  TorusField h2;
  bool decoupled = false;

  ShadowParams(double rho2, SurfaceFunctionPtr h1, TorusField h2, bool decoupled = false);
  const TorusGrid& grid() const { return h2.grid(); }
  double coupling() const { return decoupled ? 0.0 : 1.0; }
};

struct ShadowState {
  TorusField w{TorusGrid(8)};
  Point p;
};

struct ShadowResidual {
  TorusField field;
  Vec2 gradient{};
  double field_norm() const { return field.norm_inf(); }
  double gradient_norm() const;
};

/// h2 e^w e^{-8 pi G(x - p)} on the grid; the Green factor vanishes like |x - p|^4.
TorusField singular_weight(const ShadowState& s, const ShadowParams& params);

ShadowResidual shadow_residual(const ShadowState& s, const ShadowParams& params);

/// Linearisation of shadow_residual at a state, acting on (phi, nu) with
/// phi mean-zero.
class ShadowLinearization {
 public:
  ShadowLinearization(const ShadowState& s, const ShadowParams& params);

  ShadowResidual apply(const TorusField& phi, Vec2 nu) const;
  /// Field block at fixed p.
  TorusField apply_field_block(const TorusField& phi) const;
  /// Hessian of log h1 - (1 - t) w at p.
  const Mat2& point_hessian() const { return hess_; }

  /// Dense matrix in L2-scaled coordinates (sqrt(cell area) phi, nu), with
  /// the constant field mode mapped to a large multiple of itself. n <= 48.
  Eigen::MatrixXd dense() const;
  /// Smallest singular value on mean-zero fields x R^2.
  double smallest_singular_value() const;
  /// (-1)^{neg(-field block) + neg(-point Hessian)}.
  int morse_sign() const;

 private:
  TorusGrid grid_;
  double rho2_, coupling_;
  Point p_;
  TorusField P_;       // normalised singular weight
  TorusField Px_, Py_; // P * 8 pi dG/dx, dG/dy at x - p
  Mat2 hess_{};
};

constexpr double kNonDegeneracy = 1e-6;

struct ShadowOptions {
  double tol = 1e-9;
  int max_iter = 40;
  double gmres_tol = 1e-11;
  int gmres_max_iter = 400;
  bool certify = true;  // singular value and Morse sign (n <= 48 only)
};

struct ShadowReport {
  ShadowState state;
  double field_residual = 0.0;     // sup norm
  double gradient_residual = 0.0;  // max abs component
  int iterations = 0;
  bool converged = false;
  std::optional<double> smallest_singular_value;
  int morse_sign = 0;  // 0 when degenerate or not certified
  bool degenerate = false;
};

/// Joint damped Newton-GMRES on (w, p), preconditioned by
/// blockdiag(Lap^-1, Hess^-1). Throws ConvergenceError after max_iter.
ShadowReport shadow_newton(const ShadowState& start, const ShadowParams& params,
                           const ShadowOptions& opts = {});

/// Sum of Morse signs; refuses degenerate or uncertified reports.
int morse_census(const std::vector<ShadowReport>& reports);

/// Newton from each start, dropping non-converged runs and duplicates of p.
std::vector<ShadowReport> solve_from_starts(const std::vector<Point>& starts,
                                            const ShadowParams& params,
                                            const ShadowOptions& opts = {});

/// Slope of log(h2 e^w e^{-8 pi G}) against log |x - p| over radii in
/// [r_min, r_max], averaged over 8 directions.
double vanishing_exponent(const ShadowState& s, const ShadowParams& params,
                          double r_min = 1e-3, double r_max = 2e-2);

}  // namespace mfdeg::shadow
