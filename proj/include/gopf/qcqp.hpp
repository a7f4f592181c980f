#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gopf/admittance.hpp"
#include "gopf/network.hpp"

namespace gopf {

/// One power-balance equality <A_r, xx'> + a_r' y = b_r over x = (e, f) and
/// y = (p, q). The Hessian is stored as a canonical upper-triangle coordinate
/// list and is exactly symmetric by construction.
struct QuadConstraint {
  enum class Family { PGen, QGen, PLoad, QLoad };

  struct Entry {
    int row, col;  // row <= col
    double value;  // full symmetric entry A[row][col]
  };

  std::vector<Entry> hessian;
  std::vector<std::pair<int, double>> linear;  // (y index, coefficient)
  double rhs = 0.0;
  Family family = Family::PLoad;
  int bus = -1;

  /// <A_r, xx'>
  double quad_value(const Eigen::VectorXd& x) const;
  /// gradient of the quadratic form, 2 A_r x
  Eigen::VectorXd quad_gradient(const Eigen::VectorXd& x) const;
  double linear_value(const Eigen::VectorXd& y) const;
  /// M += scale * A_r (dense symmetric accumulation)
  void add_to_dense(Eigen::MatrixXd& m, double scale) const;
  Eigen::MatrixXd dense_hessian(int dim) const;
};

struct Point {
  Eigen::VectorXd x;  // (e, f), length 2n
  Eigen::VectorXd y;  // (p, q), length 2 * num_gens
};

/// The nonconvex rectangular QCQP. Layout: x_i = e_i, x_{i+n} = f_i;
/// y_g = p_g, y_{g+ngen} = q_g. Constraint order: P balances on generator
/// buses, Q balances on generator buses, then the same two groups for load
/// buses; |constraints| = 2n.
struct OpfQcqp {
  Network network;
  int n = 0;
  int ngen = 0;
  std::vector<QuadConstraint> constraints;

  // squared-magnitude bounds per bus
  std::vector<double> v_lo, v_hi;
  // injection box, stacked like y
  Eigen::VectorXd y_lo, y_hi;
  // objective over p only: sum_g C_g p_g^2 + c_g p_g + constant
  std::vector<double> obj_quadratic, obj_linear;
  double obj_constant = 0.0;

  int nx() const { return 2 * n; }
  int ny() const { return 2 * ngen; }

  double objective(const Eigen::VectorXd& y) const;
  bool inside_bounds(const Point& pt, double tol) const;
};

OpfQcqp assemble_opf(const Network& net, const AdmittanceMatrix& adm);

/// Per-constraint violation <A_r, xx'> + a_r' y - b_r.
Eigen::VectorXd residual(const OpfQcqp& opf, const Point& pt);

}  // namespace gopf
