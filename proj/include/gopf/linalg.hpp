#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace gopf::linalg {

class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense symmetric matrix; the upper triangle is authoritative and writes
/// keep both triangles in sync, so stored data is exactly symmetric.
class SymMatrix {
 public:
  explicit SymMatrix(int d) : m_(Eigen::MatrixXd::Zero(d, d)) {}
  static SymMatrix from_dense(const Eigen::MatrixXd& m);

  int dim() const { return static_cast<int>(m_.rows()); }
  double operator()(int i, int j) const { return m_(i, j); }
  void set(int i, int j, double v) {
    m_(i, j) = v;
    m_(j, i) = v;
  }
  void add(int i, int j, double v) {
    m_(i, j) += v;
    if (i != j) m_(j, i) += v;
  }
  const Eigen::MatrixXd& dense() const { return m_; }
  double inf_norm() const { return m_.cwiseAbs().rowwise().sum().maxCoeff(); }

 private:
  Eigen::MatrixXd m_;
};

/// Smallest eigenvalue by full symmetric eigendecomposition
/// (tridiagonalization plus implicit-shift iteration).
double min_eigenvalue(const SymMatrix& m);

/// True iff the Cholesky factorization of M + tol*I succeeds.
bool is_psd(const SymMatrix& m, double tol);

/// Solves M x = rhs for symmetric nonsingular M. The returned solution
/// satisfies ||M x - rhs||_inf <= 1e-8 * (1 + ||rhs||_inf); otherwise
/// SingularMatrixError is thrown.
Eigen::VectorXd solve_sym(const SymMatrix& m, const Eigen::VectorXd& rhs);

}  // namespace gopf::linalg
