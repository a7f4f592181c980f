#include "gopf/linalg.hpp"

#include <cmath>

namespace gopf::linalg {

SymMatrix SymMatrix::from_dense(const Eigen::MatrixXd& m) {
  SymMatrix s(static_cast<int>(m.rows()));
  s.m_ = 0.5 * (m + m.transpose());
  return s;
}

double min_eigenvalue(const SymMatrix& m) {
  if (m.dim() == 0) return 0.0;
  if (!m.dense().allFinite())
    throw std::invalid_argument("min_eigenvalue: matrix has non-finite entries");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.dense(),
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("min_eigenvalue: eigeniteration did not converge");
  return es.eigenvalues().minCoeff();
}

bool is_psd(const SymMatrix& m, double tol) {
  if (tol < 0.0) throw std::invalid_argument("is_psd: negative tolerance");
  if (m.dim() == 0) return true;
  Eigen::MatrixXd shifted = m.dense();
  shifted.diagonal().array() += tol;
  Eigen::LLT<Eigen::MatrixXd> llt(shifted);
  return llt.info() == Eigen::Success;
}

Eigen::VectorXd solve_sym(const SymMatrix& m, const Eigen::VectorXd& rhs) {
  const double bound = 1e-8 * (1.0 + rhs.cwiseAbs().maxCoeff());
  auto residual_ok = [&](const Eigen::VectorXd& sol) {
    return (m.dense() * sol - rhs).cwiseAbs().maxCoeff() <= bound;
  };

  Eigen::LDLT<Eigen::MatrixXd> ldlt(m.dense());
  if (ldlt.info() == Eigen::Success) {
    Eigen::VectorXd sol = ldlt.solve(rhs);
    // one refinement pass tightens the residual when the factorization is fine
    sol += ldlt.solve(rhs - m.dense() * sol);
    if (sol.allFinite() && residual_ok(sol)) return sol;
  }
  // LDLT pivoting can fail on strongly indefinite inputs; LU ignores symmetry
  // but handles any nonsingular matrix
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(m.dense());
  Eigen::VectorXd sol = lu.solve(rhs);
  sol += lu.solve(rhs - m.dense() * sol);
  if (sol.allFinite() && residual_ok(sol)) return sol;
  throw SingularMatrixError("solve_sym: factorization failed or residual too large");
}

}  // namespace gopf::linalg
