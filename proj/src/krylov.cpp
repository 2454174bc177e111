#include "mfdeg/krylov.hpp"

#include <cmath>
#include <vector>

namespace mfdeg {

GmresResult gmres(const LinearOperator& A, const Eigen::VectorXd& b,
                  const LinearOperator& M, double tol, int max_iter,
                  int restart) {
  const Eigen::Index n = b.size();
  auto precond = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return M ? M(v) : v;
  };
  GmresResult out;
  out.x = Eigen::VectorXd::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    out.converged = true;
    return out;
  }

  Eigen::VectorXd y_acc = Eigen::VectorXd::Zero(n);  // accumulated in y-space
  Eigen::VectorXd r = b;
  int total = 0;
  while (total < max_iter) {
    const double beta = r.norm();
    out.relative_residual = beta / bnorm;
    if (out.relative_residual <= tol) {
      out.converged = true;
      break;
    }
    const int m = std::min(restart, max_iter - total);
    std::vector<Eigen::VectorXd> V;
    V.reserve(m + 1);
    V.push_back(r / beta);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
    std::vector<double> cs(m), sn(m);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(m + 1);
    g(0) = beta;

    int k = 0;
    for (; k < m; ++k) {
      Eigen::VectorXd w = A(precond(V[k]));
      // modified Gram-Schmidt, twice for stability
      for (int pass = 0; pass < 2; ++pass)
        for (int j = 0; j <= k; ++j) {
          const double h = V[j].dot(w);
          H(j, k) += h;
          w -= h * V[j];
        }
      H(k + 1, k) = w.norm();
      for (int j = 0; j < k; ++j) {
        const double t = cs[j] * H(j, k) + sn[j] * H(j + 1, k);
        H(j + 1, k) = -sn[j] * H(j, k) + cs[j] * H(j + 1, k);
        H(j, k) = t;
      }
      const double denom = std::hypot(H(k, k), H(k + 1, k));
      cs[k] = denom == 0.0 ? 1.0 : H(k, k) / denom;
      sn[k] = denom == 0.0 ? 0.0 : H(k + 1, k) / denom;
      const double hk1 = H(k + 1, k);
      H(k, k) = denom;
      H(k + 1, k) = 0.0;
      g(k + 1) = -sn[k] * g(k);
      g(k) = cs[k] * g(k);
      ++total;
      const bool breakdown = hk1 <= 1e-14 * denom;
      if (!breakdown) V.push_back(w / hk1);
      if (std::abs(g(k + 1)) / bnorm <= tol || breakdown) {
        ++k;
        break;
      }
    }
    // back substitution on the k x k triangle
    Eigen::VectorXd z = H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    for (int j = 0; j < k; ++j) y_acc += z(j) * V[j];
    r = b - A(precond(y_acc));
    out.iterations = total;
  }
  out.relative_residual = r.norm() / bnorm;
  out.converged = out.converged || out.relative_residual <= tol;
  out.x = precond(y_acc);
  return out;
}

}  // namespace mfdeg
