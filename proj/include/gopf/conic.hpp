#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <limits>
#include <vector>

namespace gopf::conic {

/// Cone layout for the rows of G: a nonnegative orthant block first, then
/// second-order cones, then PSD blocks in svec packing.
struct ConeSpec {
  int lin = 0;
  std::vector<int> soc;  // cone dimensions, each >= 1
  std::vector<int> psd;  // matrix dimensions, each >= 1

  int total_rows() const;
  double degree() const;
};

int svec_dim(int d);

/// svec packs the lower triangle column-major with off-diagonal entries
/// scaled by sqrt(2), so <svec(A), svec(B)> = <A, B>.
Eigen::VectorXd svec(const Eigen::MatrixXd& m);
Eigen::MatrixXd smat(const Eigen::VectorXd& v, int d);

enum class Status { Optimal, MaxIter, PrimalInfeasible, DualInfeasible, NumericalError };

const char* to_string(Status s);

struct Settings {
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
  int max_iter = 200;
  double step_fraction = 0.98;
  int refine_steps = 2;
  bool verbose = false;
  bool self_check = false;  // verify Newton systems each iteration (tests)
};

struct Info {
  int iterations = 0;
  double primal_res = std::numeric_limits<double>::infinity();
  double dual_res = std::numeric_limits<double>::infinity();
  double rel_gap = std::numeric_limits<double>::infinity();
  double abs_gap = std::numeric_limits<double>::infinity();
  double tau = 1.0, kappa = 0.0;
};

/// Conic linear program
///   min c'u   s.t.  A u = b,  G u + s = h,  s in K.
/// A and G are sparse; the solver is dense internally and sized for problems
/// with a few thousand cone rows.
struct Problem {
  Eigen::VectorXd c;
  Eigen::SparseMatrix<double> A;  // p x n, p may be 0
  Eigen::VectorXd b;
  Eigen::SparseMatrix<double> G;  // m x n
  Eigen::VectorXd h;
  ConeSpec cones;
};

struct Solution {
  Status status = Status::NumericalError;
  Eigen::VectorXd x;  // primal variables
  Eigen::VectorXd y;  // equality multipliers
  Eigen::VectorXd z;  // cone multipliers, z in K
  Eigen::VectorXd s;  // cone slacks, s in K
  double primal_obj = 0.0, dual_obj = 0.0;
  Info info;
};

Solution solve(const Problem& prob, const Settings& settings = {});

}  // namespace gopf::conic
