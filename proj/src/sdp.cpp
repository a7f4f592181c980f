#include "gopf/sdp.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace gopf::sdp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::MaxIter: return "max_iter";
    case SolveStatus::Infeasible: return "infeasible";
  }
  return "?";
}

namespace {

// svec index of entry (i, j) for dimension d
int svec_index(int i, int j, int d) {
  if (i < j) std::swap(i, j);
  return j * d - j * (j - 1) / 2 + (i - j);
}

}  // namespace

SdpProblem build_rank_relaxation(const OpfQcqp& opf) {
  const int n = opf.n;
  const int g = opf.ngen;
  const int xd = 2 * n;
  const int ad = 1 + 2 * g;
  const int dx = conic::svec_dim(xd);
  const int dy = conic::svec_dim(2 * g);
  const int da = conic::svec_dim(ad);
  const double rt2 = std::sqrt(2.0);

  SdpProblem prob;
  prob.n = n;
  prob.ngen = g;
  prob.obj_constant = opf.obj_constant;
  prob.x_svec_off = 0;
  prob.y_svec_off = dx;
  prob.y_off = dx + dy;

  const int nvar = dx + dy + 2 * g;
  const int neq = static_cast<int>(opf.constraints.size());
  const int nlin = 2 * n + 4 * g + 2 * g;
  prob.row_vhi = 0;
  prob.row_vlo = n;
  prob.row_boxes = 2 * n;
  prob.row_ycap = 2 * n + 4 * g;
  prob.row_arrow = nlin;
  prob.row_xpsd = nlin + da;

  auto& cp = prob.cone_problem;
  cp.c = VectorXd::Zero(nvar);
  for (int k = 0; k < g; ++k) {
    cp.c[prob.y_svec_off + svec_index(k, k, 2 * g)] = opf.obj_quadratic[k];
    cp.c[prob.y_off + k] = opf.obj_linear[k];
  }

  // balance equalities reuse the QCQP records verbatim
  std::vector<Eigen::Triplet<double>> atrip;
  cp.b = VectorXd::Zero(neq);
  for (int r = 0; r < neq; ++r) {
    const auto& con = opf.constraints[r];
    for (const auto& e : con.hessian) {
      double coef = e.row == e.col ? e.value : rt2 * e.value;
      atrip.emplace_back(r, prob.x_svec_off + svec_index(e.row, e.col, xd), coef);
    }
    for (const auto& [idx, coef] : con.linear)
      atrip.emplace_back(r, prob.y_off + idx, coef);
    cp.b[r] = con.rhs;
  }
  cp.A.resize(neq, nvar);
  cp.A.setFromTriplets(atrip.begin(), atrip.end());

  const int nrows = nlin + da + dx;
  std::vector<Eigen::Triplet<double>> gtrip;
  cp.h = VectorXd::Zero(nrows);

  // squared-magnitude rows on the X diagonal
  for (int i = 0; i < n; ++i) {
    int di = prob.x_svec_off + svec_index(i, i, xd);
    int dif = prob.x_svec_off + svec_index(i + n, i + n, xd);
    gtrip.emplace_back(prob.row_vhi + i, di, 1.0);
    gtrip.emplace_back(prob.row_vhi + i, dif, 1.0);
    cp.h[prob.row_vhi + i] = opf.v_hi[i];
    gtrip.emplace_back(prob.row_vlo + i, di, -1.0);
    gtrip.emplace_back(prob.row_vlo + i, dif, -1.0);
    cp.h[prob.row_vlo + i] = -opf.v_lo[i];
  }
  // injection boxes, layout [p_hi | p_lo | q_hi | q_lo], one entry per unit
  for (int k = 0; k < g; ++k) {
    gtrip.emplace_back(prob.row_boxes + k, prob.y_off + k, 1.0);
    cp.h[prob.row_boxes + k] = opf.y_hi[k];
    gtrip.emplace_back(prob.row_boxes + g + k, prob.y_off + k, -1.0);
    cp.h[prob.row_boxes + g + k] = -opf.y_lo[k];
    gtrip.emplace_back(prob.row_boxes + 2 * g + k, prob.y_off + g + k, 1.0);
    cp.h[prob.row_boxes + 2 * g + k] = opf.y_hi[g + k];
    gtrip.emplace_back(prob.row_boxes + 3 * g + k, prob.y_off + g + k, -1.0);
    cp.h[prob.row_boxes + 3 * g + k] = -opf.y_lo[g + k];
  }
  // loose diagonal caps on Y; every y y' point satisfies them with slack, they
  // only keep the lifted block from drifting when its cost weight is zero
  for (int k = 0; k < 2 * g; ++k) {
    double cap = 2.0 * std::max({std::abs(opf.y_lo[k]), std::abs(opf.y_hi[k]), 1.0});
    gtrip.emplace_back(prob.row_ycap + k,
                       prob.y_svec_off + svec_index(k, k, 2 * g), 1.0);
    cp.h[prob.row_ycap + k] = cap * cap;
  }

  // arrow block: s = [[1, y'], [y, Y]]
  cp.h[prob.row_arrow + svec_index(0, 0, ad)] = 1.0;
  for (int k = 0; k < 2 * g; ++k)
    gtrip.emplace_back(prob.row_arrow + svec_index(k + 1, 0, ad), prob.y_off + k,
                       -rt2);
  for (int k = 0; k < 2 * g; ++k)
    for (int l = 0; l <= k; ++l)
      gtrip.emplace_back(prob.row_arrow + svec_index(k + 1, l + 1, ad),
                         prob.y_svec_off + svec_index(k, l, 2 * g), -1.0);

  // X block: s = X
  for (int i = 0; i < dx; ++i)
    gtrip.emplace_back(prob.row_xpsd + i, prob.x_svec_off + i, -1.0);

  cp.G.resize(nrows, nvar);
  cp.G.setFromTriplets(gtrip.begin(), gtrip.end());
  cp.cones.lin = nlin;
  cp.cones.soc = {};
  cp.cones.psd = {ad, xd};
  return prob;
}

SdpSolution solve_sdp(const OpfQcqp& opf, const SdpProblem& prob,
                      const SdpTolerances& tols) {
  conic::Settings st;
  st.feas_tol = std::min(1e-8, tols.feas * 0.1);
  st.gap_tol = std::min(1e-8, tols.gap * 0.1);

  auto cs = conic::solve(prob.cone_problem, st);

  SdpSolution sol;
  sol.info = cs.info;
  if (cs.status == conic::Status::PrimalInfeasible ||
      cs.status == conic::Status::DualInfeasible) {
    sol.status = SolveStatus::Infeasible;
    return sol;
  }

  const int n = prob.n;
  const int g = prob.ngen;
  sol.X = conic::smat(cs.x.segment(prob.x_svec_off, conic::svec_dim(2 * n)), 2 * n);
  sol.Y = conic::smat(cs.x.segment(prob.y_svec_off, conic::svec_dim(2 * g)), 2 * g);
  sol.y = cs.x.segment(prob.y_off, 2 * g);
  sol.value = cs.primal_obj + prob.obj_constant;
  sol.duality_gap = std::abs(cs.primal_obj - cs.dual_obj);

  sol.phi = cs.y;
  sol.gamma_hi = cs.z.segment(prob.row_vhi, n).cwiseMax(0.0);
  sol.gamma_lo = cs.z.segment(prob.row_vlo, n).cwiseMax(0.0);
  sol.theta_p_hi = cs.z.segment(prob.row_boxes, g).cwiseMax(0.0);
  sol.theta_p_lo = cs.z.segment(prob.row_boxes + g, g).cwiseMax(0.0);
  sol.theta_q_hi = cs.z.segment(prob.row_boxes + 2 * g, g).cwiseMax(0.0);
  sol.theta_q_lo = cs.z.segment(prob.row_boxes + 3 * g, g).cwiseMax(0.0);
  sol.z_arrow = conic::smat(
      cs.z.segment(prob.row_arrow, conic::svec_dim(prob.arrow_dim())),
      prob.arrow_dim());
  sol.rho = sol.z_arrow(0, 0);
  sol.z_x = conic::smat(cs.z.segment(prob.row_xpsd, conic::svec_dim(2 * n)), 2 * n);

  sol.max_eq_residual = 0.0;
  for (const auto& con : opf.constraints) {
    double lhs = 0.0;
    for (const auto& e : con.hessian)
      lhs += e.row == e.col ? e.value * sol.X(e.row, e.col)
                            : 2.0 * e.value * sol.X(e.row, e.col);
    lhs += con.linear_value(sol.y);
    sol.max_eq_residual = std::max(sol.max_eq_residual, std::abs(lhs - con.rhs));
  }

  bool within = sol.max_eq_residual <= tols.feas &&
                sol.duality_gap <= tols.gap * (1.0 + std::abs(cs.primal_obj)) &&
                cs.info.dual_res <= tols.feas;
  sol.status = within ? SolveStatus::Optimal : SolveStatus::MaxIter;
  return sol;
}

MatrixXd SdpSolution::shifted_hessian(const OpfQcqp& opf) const {
  const int n = opf.n;
  MatrixXd m = MatrixXd::Zero(2 * n, 2 * n);
  for (size_t r = 0; r < opf.constraints.size(); ++r)
    opf.constraints[r].add_to_dense(m, phi[r]);
  for (int i = 0; i < n; ++i) {
    double gp = gamma_hi[i] - gamma_lo[i];
    m(i, i) += gp;
    m(i + n, i + n) += gp;
  }
  return m;
}

MatrixXd SdpSolution::w_matrix(const OpfQcqp& opf) const {
  const int n = opf.n;
  const int g = opf.ngen;
  const int dim = 1 + 2 * g + 2 * n;
  MatrixXd w = MatrixXd::Zero(dim, dim);
  w(0, 0) = rho;
  VectorXd lin = VectorXd::Zero(2 * g);
  for (int k = 0; k < g; ++k) {
    lin[k] = opf.obj_linear[k] + theta_p_hi[k] - theta_p_lo[k];
    lin[g + k] = theta_q_hi[k] - theta_q_lo[k];
  }
  for (size_t r = 0; r < opf.constraints.size(); ++r)
    for (const auto& [idx, coef] : opf.constraints[r].linear)
      lin[idx] += phi[r] * coef;
  w.block(1, 0, 2 * g, 1) = 0.5 * lin;
  w.block(0, 1, 1, 2 * g) = 0.5 * lin.transpose();
  for (int k = 0; k < g; ++k) w(1 + k, 1 + k) = opf.obj_quadratic[k];
  w.block(1 + 2 * g, 1 + 2 * g, 2 * n, 2 * n) = shifted_hessian(opf);
  return w;
}

double SdpSolution::dual_objective(const OpfQcqp& opf) const {
  const int n = opf.n;
  const int g = opf.ngen;
  double v = -rho;
  for (int k = 0; k < g; ++k) {
    v += theta_p_lo[k] * opf.y_lo[k] - theta_p_hi[k] * opf.y_hi[k];
    v += theta_q_lo[k] * opf.y_lo[g + k] - theta_q_hi[k] * opf.y_hi[g + k];
  }
  for (int i = 0; i < n; ++i)
    v += gamma_lo[i] * opf.v_lo[i] - gamma_hi[i] * opf.v_hi[i];
  for (size_t r = 0; r < opf.constraints.size(); ++r)
    v -= phi[r] * opf.constraints[r].rhs;
  return v;
}

double root_gap(double sdp_value, double reference_opt) {
  if (reference_opt == 0.0)
    throw std::invalid_argument("root_gap: zero reference optimum");
  return std::abs((reference_opt - sdp_value) / reference_opt) * 100.0;
}

void write_sdpa_like(const SdpProblem& prob, std::ostream& os) {
  const auto& cp = prob.cone_problem;
  os << "* rank relaxation dump, sparse conic layout\n";
  os << "nvar " << cp.c.size() << "\n";
  os << "neq " << cp.A.rows() << "\n";
  os << "cones lin " << cp.cones.lin << " psd";
  for (int d : cp.cones.psd) os << " " << d;
  os << "\n";
  os << "objective\n";
  for (int i = 0; i < cp.c.size(); ++i)
    if (cp.c[i] != 0.0) os << i << " " << cp.c[i] << "\n";
  os << "equalities\n";
  for (int k = 0; k < cp.A.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(cp.A, k); it; ++it)
      os << it.row() << " " << it.col() << " " << it.value() << "\n";
  os << "rhs\n";
  for (int i = 0; i < cp.b.size(); ++i)
    if (cp.b[i] != 0.0) os << i << " " << cp.b[i] << "\n";
  os << "cone rows\n";
  for (int k = 0; k < cp.G.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(cp.G, k); it; ++it)
      os << it.row() << " " << it.col() << " " << it.value() << "\n";
  os << "cone offsets\n";
  for (int i = 0; i < cp.h.size(); ++i)
    if (cp.h[i] != 0.0) os << i << " " << cp.h[i] << "\n";
  os << "end\n";
}

}  // namespace gopf::sdp
