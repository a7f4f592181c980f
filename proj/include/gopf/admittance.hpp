#pragma once

#include <Eigen/Sparse>

#include "gopf/network.hpp"

namespace gopf {

/// Bus admittance matrix Y = G + jB in per unit. Entry (i,k) is nonzero only
/// for k adjacent to i or k == i. With no tap ratios or phase shifts both
/// parts are symmetric.
struct AdmittanceMatrix {
  int n = 0;
  Eigen::SparseMatrix<double> G;
  Eigen::SparseMatrix<double> B;

  double g(int i, int k) const { return G.coeff(i, k); }
  double b(int i, int k) const { return B.coeff(i, k); }
};

/// Standard construction: per-branch series admittance 1/(r+jx), half the
/// charging susceptance at each end, tap ratio and phase shift applied on the
/// from side, bus shunts added to the diagonal. Throws on a zero series
/// impedance.
AdmittanceMatrix build_admittance(const Network& net);

}  // namespace gopf
