#pragma once

// Scalar mean field equation
//   Lap u + rho1 (h1 e^u / int h1 e^u - 1) - rho2 (h2 e^-u / int h2 e^-u - 1) = 0
// and its two-component form for (v1, v2) with u = v1 - v2, on the torus.

#include <optional>
#include <utility>
#include <vector>

#include "mfdeg/torus.hpp"

namespace mfdeg::solver {

using torus::Point;
using torus::TorusField;
using torus::TorusGrid;

struct ProblemParams {
  double rho1 = 0.0;
  double rho2 = 0.0;
  TorusField h1;
  TorusField h2;

  ProblemParams(double r1, double r2, TorusField a, TorusField b);
  const TorusGrid& grid() const { return h1.grid(); }
};

struct SolverOptions {
  double tol = 1e-9;
  int max_iter = 50;
  double gmres_tol = 1e-10;
  int gmres_max_iter = 400;
  bool compute_morse = false;
};

struct SolveReport {
  std::vector<TorusField> fields;  // {u} or {v1, v2}
  double residual_norm = 0.0;      // sup norm
  int newton_iters = 0;
  int neg_eigs = -1;  // -1 when not computed
  bool converged = false;
  std::vector<double> history;  // sup-norm residual per iterate
};

/// Normalised densities h1 e^u / int h1 e^u and h2 e^-u / int h2 e^-u.
std::pair<TorusField, TorusField> densities(const TorusField& u,
                                            const ProblemParams& params);

TorusField residual_scalar(const TorusField& u, const ProblemParams& params);
std::pair<TorusField, TorusField> residual_system(const TorusField& v1,
                                                  const TorusField& v2,
                                                  const ProblemParams& params);

/// Action of the linearisation of residual_scalar at u on phi.
TorusField jacobian_scalar(const TorusField& u, const ProblemParams& params,
                           const TorusField& phi);
std::pair<TorusField, TorusField> jacobian_system(const TorusField& v1,
                                                  const TorusField& v2,
                                                  const ProblemParams& params,
                                                  const TorusField& phi1,
                                                  const TorusField& phi2);

/// v1 = -Lap^-1 [rho1 (P1 - 1)], v2 = v1 - u.
std::pair<TorusField, TorusField> decompose(const TorusField& u,
                                            const ProblemParams& params);

/// Damped Newton-GMRES. Throws BlowUpError once max u exceeds 50.
SolveReport newton_scalar(const TorusField& u0, const ProblemParams& params,
                          const SolverOptions& opts = {});
SolveReport newton_system(const TorusField& v10, const TorusField& v20,
                          const ProblemParams& params,
                          const SolverOptions& opts = {});

/// Eigenvalues of -L on mean-zero fields (dense, n <= 48), ascending.
std::vector<double> linearized_spectrum_scalar(const TorusField& u,
                                               const ProblemParams& params);
/// Eigenvalues of minus the block linearisation on pairs of mean-zero
/// fields, ascending by real part.
std::vector<double> linearized_spectrum_system(const TorusField& v1,
                                               const TorusField& v2,
                                               const ProblemParams& params);

constexpr double kEigTolerance = 1e-8;
int morse_count_scalar(const TorusField& u, const ProblemParams& params);
int morse_count_system(const TorusField& v1, const TorusField& v2,
                       const ProblemParams& params);

/// (sigma1, sigma2) = (rho_i / 2 pi) * integral of P_i over the geodesic
/// disc of radius r about p. Radii up to sqrt(2)/2 (whole torus) accepted.
std::pair<double, double> local_mass(const TorusField& u,
                                     const ProblemParams& params, Point p,
                                     double r);

struct ContinuationOptions {
  double initial_step = 0.5;
  double min_step = 1e-3;
  SolverOptions newton;
  Point mass_center{0.0, 0.0};
  double mass_radius = 0.1;
  bool track_max = true;  // recentre the local mass on argmax u
};

struct ContinuationPoint {
  double rho1 = 0.0;
  double rho2 = 0.0;
  SolveReport report;
  double max_u = 0.0;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
};

struct ContinuationResult {
  std::vector<ContinuationPoint> points;
  bool completed = false;  // false when the step floor was hit
  bool blew_up = false;    // the last failed step hit the blow-up guard
};

/// Natural-parameter continuation in rho1 from a converged scalar solution,
/// visiting the targets in order.
ContinuationResult continue_rho1(const TorusField& start,
                                 const ProblemParams& params,
                                 const std::vector<double>& rho1_targets,
                                 const ContinuationOptions& opts = {});

/// Grid point where the field attains its maximum.
Point argmax(const TorusField& f);

}  // namespace mfdeg::solver
