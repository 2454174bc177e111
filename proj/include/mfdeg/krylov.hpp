#pragma once

#include <Eigen/Dense>
#include <functional>

namespace mfdeg {

using LinearOperator = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct GmresResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Restarted GMRES for A x = b with right preconditioner M: iterates on
/// A M y = b and returns x = M y. An empty M means the identity.
GmresResult gmres(const LinearOperator& A, const Eigen::VectorXd& b,
                  const LinearOperator& M = {}, double tol = 1e-10,
                  int max_iter = 400, int restart = 80);

}  // namespace mfdeg
