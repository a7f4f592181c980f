#include "gopf/admittance.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace gopf {

AdmittanceMatrix build_admittance(const Network& net) {
  using cplx = std::complex<double>;
  const int n = net.n;
  std::vector<Eigen::Triplet<cplx>> trips;
  trips.reserve(4 * net.branches.size() + n);

  for (const auto& br : net.branches) {
    if (br.r == 0.0 && br.x == 0.0)
      throw std::invalid_argument("branch " + std::to_string(br.from) + "-" +
                                  std::to_string(br.to) +
                                  " has zero series impedance");
    cplx ys = 1.0 / cplx(br.r, br.x);
    cplx ysh(0.0, br.b / 2.0);
    cplx tap = br.tap * std::exp(cplx(0.0, br.shift_rad));
    // from side sits behind the (complex) tap
    cplx yff = (ys + ysh) / (tap * std::conj(tap));
    cplx yft = -ys / std::conj(tap);
    cplx ytf = -ys / tap;
    cplx ytt = ys + ysh;
    trips.emplace_back(br.from, br.from, yff);
    trips.emplace_back(br.from, br.to, yft);
    trips.emplace_back(br.to, br.from, ytf);
    trips.emplace_back(br.to, br.to, ytt);
  }
  for (int i = 0; i < n; ++i)
    trips.emplace_back(i, i, cplx(net.shunt_g[i], net.shunt_b[i]));

  Eigen::SparseMatrix<cplx> Y(n, n);
  Y.setFromTriplets(trips.begin(), trips.end());

  AdmittanceMatrix adm;
  adm.n = n;
  std::vector<Eigen::Triplet<double>> gt, bt;
  for (int col = 0; col < Y.outerSize(); ++col)
    for (Eigen::SparseMatrix<cplx>::InnerIterator it(Y, col); it; ++it) {
      gt.emplace_back(it.row(), it.col(), it.value().real());
      bt.emplace_back(it.row(), it.col(), it.value().imag());
    }
  adm.G.resize(n, n);
  adm.B.resize(n, n);
  adm.G.setFromTriplets(gt.begin(), gt.end());
  adm.B.setFromTriplets(bt.begin(), bt.end());
  return adm;
}

}  // namespace gopf
