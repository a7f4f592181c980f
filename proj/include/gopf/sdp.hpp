#pragma once

#include <Eigen/Dense>
#include <iosfwd>

#include "gopf/conic.hpp"
#include "gopf/qcqp.hpp"

namespace gopf::sdp {

struct SdpTolerances {
  double feas = 1e-7;
  double gap = 1e-7;
  double psd = 1e-7;
};

enum class SolveStatus { Optimal, MaxIter, Infeasible };

const char* to_string(SolveStatus s);

/// The rank relaxation: X carries the products of (e, f); the arrow block
/// [[1, y'], [y, Y]] couples the injections to their product matrix Y; the
/// power balances are kept as the exact constraint records of the QCQP.
struct SdpProblem {
  int n = 0;
  int ngen = 0;
  double obj_constant = 0.0;
  conic::Problem cone_problem;

  // variable offsets into the conic variable vector
  int x_svec_off = 0, y_svec_off = 0, y_off = 0;
  // cone-row offsets; row_ycap holds redundant diagonal caps on Y that keep
  // the optimal face bounded when cost rows are purely linear
  int row_vhi = 0, row_vlo = 0, row_boxes = 0, row_ycap = 0, row_arrow = 0,
      row_xpsd = 0;

  int x_dim() const { return 2 * n; }
  int arrow_dim() const { return 1 + 2 * ngen; }
};

struct SdpSolution {
  SolveStatus status = SolveStatus::MaxIter;
  double value = 0.0;  // $/h, constant included
  Eigen::MatrixXd X, Y;
  Eigen::VectorXd y;  // (p, q) per unit

  // dual certificate
  Eigen::VectorXd phi;                   // per balance row
  Eigen::VectorXd gamma_hi, gamma_lo;    // per bus, nonnegative
  Eigen::VectorXd theta_p_hi, theta_p_lo;
  Eigen::VectorXd theta_q_hi, theta_q_lo;
  double rho = 0.0;
  Eigen::MatrixXd z_arrow;  // dual block of the arrow constraint
  Eigen::MatrixXd z_x;      // dual block of X >= 0

  double duality_gap = 0.0;      // absolute, conic level
  double max_eq_residual = 0.0;  // balance rows at (X, y)
  conic::Info info;

  /// Dual matrix assembled from the multipliers: corner rho, linear block
  /// (c + theta_hi - theta_lo + sum phi a) / 2, cost block, and
  /// sum phi A + d(gamma').
  Eigen::MatrixXd w_matrix(const OpfQcqp& opf) const;
  /// sum_r phi_r A_r + d(gamma_hi - gamma_lo), duplicated over both
  /// coordinate blocks.
  Eigen::MatrixXd shifted_hessian(const OpfQcqp& opf) const;
  /// Objective of the dual problem evaluated from the multipliers.
  double dual_objective(const OpfQcqp& opf) const;
};

SdpProblem build_rank_relaxation(const OpfQcqp& opf);

SdpSolution solve_sdp(const OpfQcqp& opf, const SdpProblem& prob,
                      const SdpTolerances& tols = {});

/// |reference - value| / |reference| * 100
double root_gap(double sdp_value, double reference_opt);

/// Sparse text dump of the assembled relaxation for external cross-checks.
void write_sdpa_like(const SdpProblem& prob, std::ostream& os);

}  // namespace gopf::sdp
