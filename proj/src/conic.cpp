#include "gopf/conic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace gopf::conic {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

int ConeSpec::total_rows() const {
  int t = lin;
  for (int q : soc) t += q;
  for (int d : psd) t += svec_dim(d);
  return t;
}

double ConeSpec::degree() const {
  double deg = lin + static_cast<double>(soc.size());
  for (int d : psd) deg += d;
  return deg;
}

int svec_dim(int d) { return d * (d + 1) / 2; }

Eigen::VectorXd svec(const Eigen::MatrixXd& m) {
  const int d = static_cast<int>(m.rows());
  const double rt2 = std::sqrt(2.0);
  Eigen::VectorXd v(svec_dim(d));
  int k = 0;
  for (int j = 0; j < d; ++j) {
    v[k++] = m(j, j);
    for (int i = j + 1; i < d; ++i) v[k++] = rt2 * 0.5 * (m(i, j) + m(j, i));
  }
  return v;
}

Eigen::MatrixXd smat(const Eigen::VectorXd& v, int d) {
  const double inv_rt2 = 1.0 / std::sqrt(2.0);
  Eigen::MatrixXd m(d, d);
  int k = 0;
  for (int j = 0; j < d; ++j) {
    m(j, j) = v[k++];
    for (int i = j + 1; i < d; ++i) {
      m(i, j) = inv_rt2 * v[k];
      m(j, i) = inv_rt2 * v[k];
      ++k;
    }
  }
  return m;
}

const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::MaxIter: return "max_iter";
    case Status::PrimalInfeasible: return "primal_infeasible";
    case Status::DualInfeasible: return "dual_infeasible";
    case Status::NumericalError: return "numerical_error";
  }
  return "?";
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct BlockLayout {
  int lin_off = 0, lin_dim = 0;
  std::vector<std::pair<int, int>> soc;  // (row offset, cone dim)
  std::vector<std::pair<int, int>> psd;  // (row offset, matrix dim)
};

BlockLayout make_layout(const ConeSpec& k) {
  BlockLayout b;
  int off = 0;
  b.lin_off = off;
  b.lin_dim = k.lin;
  off += k.lin;
  for (int q : k.soc) {
    b.soc.emplace_back(off, q);
    off += q;
  }
  for (int d : k.psd) {
    b.psd.emplace_back(off, d);
    off += svec_dim(d);
  }
  return b;
}

// Operator matrix of V -> H V H in svec coordinates, H symmetric.
MatrixXd sym_sandwich_matrix(const MatrixXd& h) {
  const int d = static_cast<int>(h.rows());
  const int dim = svec_dim(d);
  const double rt2 = std::sqrt(2.0);
  MatrixXd k(dim, dim);
  int col = 0;
  for (int j = 0; j < d; ++j) {
    {
      const VectorXd uj = h.col(j);
      int row = 0;
      for (int jc = 0; jc < d; ++jc) {
        k(row++, col) = uj[jc] * uj[jc];
        for (int ic = jc + 1; ic < d; ++ic) k(row++, col) = rt2 * uj[ic] * uj[jc];
      }
      ++col;
    }
    for (int i = j + 1; i < d; ++i) {
      const VectorXd ui = h.col(i);
      const VectorXd uj = h.col(j);
      int row = 0;
      for (int jc = 0; jc < d; ++jc) {
        k(row++, col) = rt2 * ui[jc] * uj[jc];
        for (int ic = jc + 1; ic < d; ++ic)
          k(row++, col) = ui[ic] * uj[jc] + uj[ic] * ui[jc];
      }
      ++col;
    }
  }
  return k;
}

struct SocScaling {
  double eta = 1.0;
  VectorXd wbar;  // unit hyperbolic point, wbar' J wbar = 1
};

struct PsdScaling {
  MatrixXd r, rinv;
  MatrixXd h;            // h = r r'
  MatrixXd kfwd;         // operator matrix of W'W
  VectorXd lambda_diag;  // NT spectrum
};

struct Scaling {
  VectorXd lin_w;
  std::vector<SocScaling> soc;
  std::vector<PsdScaling> psd;
  VectorXd lambda;  // scaled point, full cone layout
};

// H(wbar) v, the symmetric SOC scaling kernel
VectorXd soc_house_apply(const VectorXd& w, const VectorXd& v) {
  const int q = static_cast<int>(v.size());
  VectorXd out(q);
  if (q == 1) {
    out[0] = w[0] * v[0];
    return out;
  }
  const double w0 = w[0];
  const auto w1 = w.tail(q - 1);
  const auto v1 = v.tail(q - 1);
  const double w1v1 = w1.dot(v1);
  out[0] = w0 * v[0] + w1v1;
  out.tail(q - 1) = v[0] * w1 + v1 + (w1v1 / (1.0 + w0)) * w1;
  return out;
}

// Unpivoted dense LDL' for the statically regularized quasidefinite KKT.
// The first npos rows get +delta on the diagonal, the rest -delta; the sign
// pattern makes the factorization exist without pivoting.
class QuasidefLdl {
 public:
  void factor(MatrixXd k, int npos, double delta) {
    const int dim = static_cast<int>(k.rows());
    for (int i = 0; i < dim; ++i) k(i, i) += i < npos ? delta : -delta;
    d_.resize(dim);
    const int bs = 96;
    for (int j0 = 0; j0 < dim; j0 += bs) {
      const int jb = std::min(bs, dim - j0);
      // unblocked factorization of the diagonal block
      for (int j = j0; j < j0 + jb; ++j) {
        double dj = k(j, j);
        if (dj == 0.0) dj = (j < npos ? 1.0 : -1.0) * 1e-300;
        d_[j] = dj;
        const int rest = j0 + jb - j - 1;
        if (rest > 0) {
          VectorXd col = k.col(j).segment(j + 1, rest);
          k.col(j).segment(j + 1, rest) = col / dj;
          k.block(j + 1, j + 1, rest, rest).template selfadjointView<Eigen::Lower>()
              .rankUpdate(col, -1.0 / dj);
        }
      }
      const int below = dim - j0 - jb;
      if (below > 0) {
        // panel solve: L21 = K21 L11^{-T} D1^{-1}
        auto l11 = k.block(j0, j0, jb, jb);
        auto k21 = k.block(j0 + jb, j0, below, jb);
        l11.transpose().template triangularView<Eigen::UnitUpper>()
            .template solveInPlace<Eigen::OnTheRight>(k21);
        for (int j = 0; j < jb; ++j) k21.col(j) /= d_[j0 + j];
        // trailing update: K22 -= L21 D1 L21'
        MatrixXd ld = k21;
        for (int j = 0; j < jb; ++j) ld.col(j) *= d_[j0 + j];
        k.block(j0 + jb, j0 + jb, below, below)
            .template triangularView<Eigen::Lower>() -= ld * k21.transpose();
      }
    }
    l_ = std::move(k);
  }

  VectorXd solve(VectorXd rhs) const {
    l_.template triangularView<Eigen::UnitLower>().solveInPlace(rhs);
    rhs.array() /= d_.array();
    l_.transpose().template triangularView<Eigen::UnitUpper>().solveInPlace(rhs);
    return rhs;
  }

 private:
  MatrixXd l_;
  VectorXd d_;
};

class Hsd {
 public:
  Hsd(const Problem& prob, const Settings& st)
      : prob_(prob),
        st_(st),
        n_(static_cast<int>(prob.c.size())),
        p_(static_cast<int>(prob.A.rows())),
        m_(prob.cones.total_rows()),
        blk_(make_layout(prob.cones)),
        at_(prob.A.transpose()),
        gt_(prob.G.transpose()) {
    if (prob.G.rows() != m_)
      throw std::invalid_argument("cone spec does not match G rows");
    if (prob.G.cols() != n_ || (p_ > 0 && prob.A.cols() != n_))
      throw std::invalid_argument("matrix dimensions do not match c");
    norm_b_ = p_ > 0 ? prob.b.cwiseAbs().maxCoeff() : 0.0;
    norm_h_ = m_ > 0 ? prob.h.cwiseAbs().maxCoeff() : 0.0;
    norm_c_ = n_ > 0 ? prob.c.cwiseAbs().maxCoeff() : 0.0;
  }

  Solution run();

 private:
  double cone_margin(const VectorXd& v) const;
  void cone_shift(VectorXd& v, double amount) const;
  double max_step(const VectorXd& v, const VectorXd& dv) const;
  VectorXd jordan_prod(const VectorXd& u, const VectorXd& v) const;
  VectorXd jordan_e() const;
  VectorXd lambda_solve(const VectorXd& rhs) const;

  void compute_scaling();
  void identity_scaling();
  VectorXd scale_w(const VectorXd& v) const;       // W v
  VectorXd scale_wt(const VectorXd& v) const;      // W' v
  VectorXd scale_winv_t(const VectorXd& v) const;  // W^{-T} v
  VectorXd apply_wsq(const VectorXd& v) const;     // W'W v

  bool factor_kkt();
  void solve_k3(const VectorXd& r1, const VectorXd& r2, const VectorXd& r3,
                VectorXd& dx, VectorXd& dy, VectorXd& dz) const;
  void solve_k3_once(const VectorXd& r1, const VectorXd& r2, const VectorXd& r3,
                     VectorXd& dx, VectorXd& dy, VectorXd& dz) const;

  bool initialize();
  Solution extract(Status status) const;

  const Problem& prob_;
  Settings st_;
  int n_, p_, m_;
  BlockLayout blk_;
  Eigen::SparseMatrix<double> at_, gt_;
  double norm_b_ = 0, norm_h_ = 0, norm_c_ = 0;

  VectorXd x_, y_, z_, s_;
  double tau_ = 1.0, kappa_ = 1.0;

  Scaling w_;
  QuasidefLdl ldl_;

  Info info_;
  double mu0_ = 1.0;
  mutable double k3_quality_ = 0.0;
  double best_score_ = kInf;
  VectorXd bx_, by_, bz_, bs_;
  double btau_ = 1.0, bkappa_ = 1.0;
  Info binfo_;
};

double Hsd::cone_margin(const VectorXd& v) const {
  double margin = kInf;
  if (blk_.lin_dim > 0)
    margin = std::min(margin, v.segment(blk_.lin_off, blk_.lin_dim).minCoeff());
  for (const auto& [off, q] : blk_.soc) {
    double rest = q > 1 ? v.segment(off + 1, q - 1).norm() : 0.0;
    margin = std::min(margin, v[off] - rest);
  }
  for (const auto& [off, dd] : blk_.psd) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(
        smat(v.segment(off, svec_dim(dd)), dd), Eigen::EigenvaluesOnly);
    margin = std::min(margin, es.eigenvalues().minCoeff());
  }
  return margin;
}

void Hsd::cone_shift(VectorXd& v, double amount) const {
  if (blk_.lin_dim > 0) v.segment(blk_.lin_off, blk_.lin_dim).array() += amount;
  for (const auto& [off, q] : blk_.soc) {
    (void)q;
    v[off] += amount;
  }
  for (const auto& [off, dd] : blk_.psd) {
    int k = off;
    for (int j = 0; j < dd; ++j) {
      v[k] += amount;  // diagonal entries in svec layout
      k += dd - j;
    }
  }
}

double Hsd::max_step(const VectorXd& v, const VectorXd& dv) const {
  double alpha = kInf;
  for (int i = 0; i < blk_.lin_dim; ++i) {
    double d = dv[blk_.lin_off + i];
    if (d < 0.0) alpha = std::min(alpha, -v[blk_.lin_off + i] / d);
  }
  for (const auto& [off, q] : blk_.soc) {
    double v0 = v[off], d0 = dv[off];
    if (q == 1) {
      if (d0 < 0.0) alpha = std::min(alpha, -v0 / d0);
      continue;
    }
    auto v1 = v.segment(off + 1, q - 1);
    auto d1 = dv.segment(off + 1, q - 1);
    double a = d0 * d0 - d1.squaredNorm();
    double b = 2.0 * (v0 * d0 - v1.dot(d1));
    double c = v0 * v0 - v1.squaredNorm();
    double root = kInf;
    if (std::abs(a) < 1e-300) {
      if (b < 0.0 && c > 0.0) root = -c / b;
    } else {
      double disc = b * b - 4.0 * a * c;
      if (disc >= 0.0) {
        double sq = std::sqrt(disc);
        double r1 = (-b - sq) / (2.0 * a);
        double r2 = (-b + sq) / (2.0 * a);
        if (r1 > r2) std::swap(r1, r2);
        if (r1 > 1e-16)
          root = r1;
        else if (r2 > 1e-16)
          root = r2;
      }
    }
    if (d0 < 0.0) root = std::min(root, -v0 / d0);
    if (std::isfinite(root)) {
      // accept only if the cone is exited just beyond the root
      double t = root * (1.0 + 1e-9) + 1e-14;
      double nv0 = v0 + t * d0;
      double nrest = (v1 + t * d1).norm();
      if (nv0 < 0.0 || nv0 * nv0 - nrest * nrest <= 1e-12 * (1.0 + nv0 * nv0))
        alpha = std::min(alpha, root);
    }
  }
  for (const auto& [off, dd] : blk_.psd) {
    MatrixXd sm = smat(v.segment(off, svec_dim(dd)), dd);
    MatrixXd dm = smat(dv.segment(off, svec_dim(dd)), dd);
    Eigen::LLT<MatrixXd> llt(sm);
    if (llt.info() != Eigen::Success) {
      MatrixXd jit = sm + 1e-12 * (1.0 + sm.norm()) * MatrixXd::Identity(dd, dd);
      llt.compute(jit);
      if (llt.info() != Eigen::Success) {
        alpha = 0.0;
        continue;
      }
    }
    MatrixXd li = llt.matrixL().solve(MatrixXd::Identity(dd, dd));
    MatrixXd mid = li * dm * li.transpose();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (mid + mid.transpose()),
                                               Eigen::EigenvaluesOnly);
    double lmin = es.eigenvalues().minCoeff();
    if (lmin < 0.0) alpha = std::min(alpha, -1.0 / lmin);
  }
  return alpha;
}

VectorXd Hsd::jordan_prod(const VectorXd& u, const VectorXd& v) const {
  VectorXd out = VectorXd::Zero(m_);
  if (blk_.lin_dim > 0)
    out.segment(blk_.lin_off, blk_.lin_dim) =
        u.segment(blk_.lin_off, blk_.lin_dim)
            .cwiseProduct(v.segment(blk_.lin_off, blk_.lin_dim));
  for (const auto& [off, q] : blk_.soc) {
    out[off] = u.segment(off, q).dot(v.segment(off, q));
    if (q > 1)
      out.segment(off + 1, q - 1) = u[off] * v.segment(off + 1, q - 1) +
                                    v[off] * u.segment(off + 1, q - 1);
  }
  for (const auto& [off, dd] : blk_.psd) {
    MatrixXd um = smat(u.segment(off, svec_dim(dd)), dd);
    MatrixXd vm = smat(v.segment(off, svec_dim(dd)), dd);
    out.segment(off, svec_dim(dd)) = svec(0.5 * (um * vm + vm * um));
  }
  return out;
}

VectorXd Hsd::jordan_e() const {
  VectorXd e = VectorXd::Zero(m_);
  cone_shift(e, 1.0);
  return e;
}

VectorXd Hsd::lambda_solve(const VectorXd& rhs) const {
  VectorXd out = VectorXd::Zero(m_);
  if (blk_.lin_dim > 0)
    out.segment(blk_.lin_off, blk_.lin_dim) =
        rhs.segment(blk_.lin_off, blk_.lin_dim)
            .cwiseQuotient(w_.lambda.segment(blk_.lin_off, blk_.lin_dim));
  for (const auto& [off, q] : blk_.soc) {
    double a = w_.lambda[off];
    if (q == 1) {
      out[off] = rhs[off] / a;
      continue;
    }
    auto b = w_.lambda.segment(off + 1, q - 1);
    auto d1 = rhs.segment(off + 1, q - 1);
    double det = a * a - b.squaredNorm();
    double x0 = (a * rhs[off] - b.dot(d1)) / det;
    out[off] = x0;
    out.segment(off + 1, q - 1) = (d1 - x0 * b) / a;
  }
  for (size_t pi = 0; pi < blk_.psd.size(); ++pi) {
    auto [off, dd] = blk_.psd[pi];
    const VectorXd& lam = w_.psd[pi].lambda_diag;
    MatrixXd dm = smat(rhs.segment(off, svec_dim(dd)), dd);
    MatrixXd xm(dd, dd);
    for (int i = 0; i < dd; ++i)
      for (int j = 0; j < dd; ++j) xm(i, j) = 2.0 * dm(i, j) / (lam[i] + lam[j]);
    out.segment(off, svec_dim(dd)) = svec(xm);
  }
  return out;
}

void Hsd::identity_scaling() {
  w_.lin_w = VectorXd::Ones(blk_.lin_dim);
  w_.soc.assign(blk_.soc.size(), {});
  for (size_t i = 0; i < blk_.soc.size(); ++i) {
    w_.soc[i].eta = 1.0;
    w_.soc[i].wbar = VectorXd::Zero(blk_.soc[i].second);
    w_.soc[i].wbar[0] = 1.0;
  }
  w_.psd.assign(blk_.psd.size(), {});
  for (size_t i = 0; i < blk_.psd.size(); ++i) {
    int dd = blk_.psd[i].second;
    w_.psd[i].r = MatrixXd::Identity(dd, dd);
    w_.psd[i].rinv = MatrixXd::Identity(dd, dd);
    w_.psd[i].h = MatrixXd::Identity(dd, dd);
    w_.psd[i].kfwd = MatrixXd::Identity(svec_dim(dd), svec_dim(dd));
    w_.psd[i].lambda_diag = VectorXd::Ones(dd);
  }
  w_.lambda = jordan_e();
}

void Hsd::compute_scaling() {
  w_.lin_w.resize(blk_.lin_dim);
  w_.lambda = VectorXd::Zero(m_);
  for (int i = 0; i < blk_.lin_dim; ++i) {
    int r = blk_.lin_off + i;
    w_.lin_w[i] = std::sqrt(s_[r] / z_[r]);
    w_.lambda[r] = std::sqrt(s_[r] * z_[r]);
  }
  w_.soc.assign(blk_.soc.size(), {});
  for (size_t i = 0; i < blk_.soc.size(); ++i) {
    auto [off, q] = blk_.soc[i];
    auto& sc = w_.soc[i];
    VectorXd sseg = s_.segment(off, q);
    VectorXd zseg = z_.segment(off, q);
    if (q == 1) {
      sc.eta = std::sqrt(sseg[0] / zseg[0]);
      sc.wbar = VectorXd::Ones(1);
      w_.lambda[off] = std::sqrt(sseg[0] * zseg[0]);
      continue;
    }
    double sres = sseg[0] * sseg[0] - sseg.tail(q - 1).squaredNorm();
    double zres = zseg[0] * zseg[0] - zseg.tail(q - 1).squaredNorm();
    sres = std::max(sres, 1e-300);
    zres = std::max(zres, 1e-300);
    double snorm = std::sqrt(sres), znorm = std::sqrt(zres);
    VectorXd sbar = sseg / snorm, zbar = zseg / znorm;
    double gamma = std::sqrt((1.0 + sbar.dot(zbar)) / 2.0);
    VectorXd wbar(q);
    wbar[0] = (sbar[0] + zbar[0]) / (2.0 * gamma);
    wbar.tail(q - 1) =
        (sbar.tail(q - 1) - zbar.tail(q - 1)) / (2.0 * gamma);
    sc.wbar = wbar;
    sc.eta = std::pow(sres / zres, 0.25);
    // lambda = W z
    VectorXd lam = sc.eta * soc_house_apply(wbar, zseg);
    w_.lambda.segment(off, q) = lam;
  }
  w_.psd.assign(blk_.psd.size(), {});
  for (size_t i = 0; i < blk_.psd.size(); ++i) {
    auto [off, dd] = blk_.psd[i];
    auto& sc = w_.psd[i];
    MatrixXd sm = smat(s_.segment(off, svec_dim(dd)), dd);
    MatrixXd zm = smat(z_.segment(off, svec_dim(dd)), dd);
    Eigen::LLT<MatrixXd> ls(sm), lz(zm);
    if (ls.info() != Eigen::Success || lz.info() != Eigen::Success)
      throw std::runtime_error("scaling point left the cone");
    MatrixXd l1 = ls.matrixL();
    MatrixXd l2 = lz.matrixL();
    Eigen::JacobiSVD<MatrixXd> svd(l2.transpose() * l1,
                                   Eigen::ComputeFullU | Eigen::ComputeFullV);
    VectorXd sig = svd.singularValues().cwiseMax(1e-150);
    VectorXd isq = sig.cwiseSqrt().cwiseInverse();
    sc.r = l1 * svd.matrixV() * isq.asDiagonal();
    sc.rinv = sig.cwiseSqrt().asDiagonal() * svd.matrixV().transpose() *
              l1.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(dd, dd));
    sc.h = sc.r * sc.r.transpose();
    sc.kfwd = sym_sandwich_matrix(sc.h);
    sc.lambda_diag = sig;
    MatrixXd lamm = sig.asDiagonal();
    w_.lambda.segment(off, svec_dim(dd)) = svec(lamm);
  }
}

VectorXd Hsd::scale_w(const VectorXd& v) const {
  VectorXd out = VectorXd::Zero(m_);
  if (blk_.lin_dim > 0)
    out.segment(blk_.lin_off, blk_.lin_dim) =
        w_.lin_w.cwiseProduct(v.segment(blk_.lin_off, blk_.lin_dim));
  for (size_t i = 0; i < blk_.soc.size(); ++i) {
    auto [off, q] = blk_.soc[i];
    out.segment(off, q) =
        w_.soc[i].eta * soc_house_apply(w_.soc[i].wbar, v.segment(off, q));
  }
  for (size_t i = 0; i < blk_.psd.size(); ++i) {
    auto [off, dd] = blk_.psd[i];
    const auto& r = w_.psd[i].r;
    MatrixXd vm = smat(v.segment(off, svec_dim(dd)), dd);
    out.segment(off, svec_dim(dd)) = svec(r.transpose() * vm * r);
  }
  return out;
}

VectorXd Hsd::scale_wt(const VectorXd& v) const {
  VectorXd out = VectorXd::Zero(m_);
  if (blk_.lin_dim > 0)
    out.segment(blk_.lin_off, blk_.lin_dim) =
        w_.lin_w.cwiseProduct(v.segment(blk_.lin_off, blk_.lin_dim));
  for (size_t i = 0; i < blk_.soc.size(); ++i) {
    auto [off, q] = blk_.soc[i];
    out.segment(off, q) =
        w_.soc[i].eta * soc_house_apply(w_.soc[i].wbar, v.segment(off, q));
  }
  for (size_t i = 0; i < blk_.psd.size(); ++i) {
    auto [off, dd] = blk_.psd[i];
    const auto& r = w_.psd[i].r;
    MatrixXd vm = smat(v.segment(off, svec_dim(dd)), dd);
    out.segment(off, svec_dim(dd)) = svec(r * vm * r.transpose());
  }
  return out;
}

VectorXd Hsd::scale_winv_t(const VectorXd& v) const {
  VectorXd out = VectorXd::Zero(m_);
  if (blk_.lin_dim > 0)
    out.segment(blk_.lin_off, blk_.lin_dim) =
        v.segment(blk_.lin_off, blk_.lin_dim).cwiseQuotient(w_.lin_w);
  for (size_t i = 0; i < blk_.soc.size(); ++i) {
    auto [off, q] = blk_.soc[i];
    VectorXd wtil = w_.soc[i].wbar;
    wtil.tail(q - 1) *= -1.0;
    out.segment(off, q) =
        (1.0 / w_.soc[i].eta) * soc_house_apply(wtil, v.segment(off, q));
  }
  for (size_t i = 0; i < blk_.psd.size(); ++i) {
    auto [off, dd] = blk_.psd[i];
    const auto& rinv = w_.psd[i].rinv;
    MatrixXd vm = smat(v.segment(off, svec_dim(dd)), dd);
    out.segment(off, svec_dim(dd)) = svec(rinv * vm * rinv.transpose());
  }
  return out;
}

VectorXd Hsd::apply_wsq(const VectorXd& v) const {
  VectorXd out = VectorXd::Zero(m_);
  if (blk_.lin_dim > 0)
    out.segment(blk_.lin_off, blk_.lin_dim) =
        w_.lin_w.array().square().matrix().cwiseProduct(
            v.segment(blk_.lin_off, blk_.lin_dim));
  for (size_t i = 0; i < blk_.soc.size(); ++i) {
    auto [off, q] = blk_.soc[i];
    const auto& wbar = w_.soc[i].wbar;
    double eta2 = w_.soc[i].eta * w_.soc[i].eta;
    VectorXd vs = v.segment(off, q);
    // W'W = eta^2 (2 wbar wbar' - J)
    VectorXd jv = vs;
    jv.tail(q - 1) *= -1.0;
    out.segment(off, q) = eta2 * (2.0 * wbar * wbar.dot(vs) - jv);
  }
  for (size_t i = 0; i < blk_.psd.size(); ++i) {
    auto [off, dd] = blk_.psd[i];
    const auto& h = w_.psd[i].h;
    MatrixXd vm = smat(v.segment(off, svec_dim(dd)), dd);
    out.segment(off, svec_dim(dd)) = svec(h * vm * h);
  }
  return out;
}

bool Hsd::factor_kkt() {
  // full quasidefinite system [0 A' G'; A 0 0; G 0 -W'W], statically
  // regularized and factored without pivoting; iterative refinement against
  // the exact operator recovers the accuracy lost to the regularization
  const int dim = n_ + p_ + m_;
  MatrixXd k = MatrixXd::Zero(dim, dim);
  for (int col = 0; col < prob_.A.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(prob_.A, col); it; ++it) {
      k(n_ + it.row(), it.col()) = it.value();
      k(it.col(), n_ + it.row()) = it.value();
    }
  for (int col = 0; col < prob_.G.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(prob_.G, col); it; ++it) {
      k(n_ + p_ + it.row(), it.col()) = it.value();
      k(it.col(), n_ + p_ + it.row()) = it.value();
    }
  const int zoff = n_ + p_;
  if (blk_.lin_dim > 0)
    for (int i = 0; i < blk_.lin_dim; ++i) {
      int r = zoff + blk_.lin_off + i;
      k(r, r) = -w_.lin_w[i] * w_.lin_w[i];
    }
  for (size_t i = 0; i < blk_.soc.size(); ++i) {
    auto [off, q] = blk_.soc[i];
    const auto& wbar = w_.soc[i].wbar;
    double eta2 = w_.soc[i].eta * w_.soc[i].eta;
    MatrixXd wsq = 2.0 * wbar * wbar.transpose();
    wsq(0, 0) -= 1.0;
    for (int j = 1; j < q; ++j) wsq(j, j) += 1.0;
    k.block(zoff + off, zoff + off, q, q) = -eta2 * wsq;
  }
  for (size_t i = 0; i < blk_.psd.size(); ++i) {
    auto [off, dd] = blk_.psd[i];
    k.block(zoff + off, zoff + off, svec_dim(dd), svec_dim(dd)) = -w_.psd[i].kfwd;
  }
  double dscale = std::max(1.0, k.diagonal().cwiseAbs().maxCoeff());
  ldl_.factor(std::move(k), n_, 1e-12 * dscale);
  return true;
}

void Hsd::solve_k3_once(const VectorXd& r1, const VectorXd& r2, const VectorXd& r3,
                        VectorXd& dx, VectorXd& dy, VectorXd& dz) const {
  VectorXd rhs(n_ + p_ + m_);
  rhs.head(n_) = r1;
  if (p_ > 0) rhs.segment(n_, p_) = r2;
  rhs.tail(m_) = r3;
  VectorXd sol = ldl_.solve(std::move(rhs));
  dx = sol.head(n_);
  dy = p_ > 0 ? VectorXd(sol.segment(n_, p_)) : VectorXd();
  dz = sol.tail(m_);
}


void Hsd::solve_k3(const VectorXd& r1, const VectorXd& r2, const VectorXd& r3,
                   VectorXd& dx, VectorXd& dy, VectorXd& dz) const {
  solve_k3_once(r1, r2, r3, dx, dy, dz);
  const double scale = 1.0 + std::max({r1.cwiseAbs().maxCoeff(),
                                       p_ > 0 ? r2.cwiseAbs().maxCoeff() : 0.0,
                                       m_ > 0 ? r3.cwiseAbs().maxCoeff() : 0.0});
  auto residual_norm = [&](const VectorXd& ddx, const VectorXd& ddy,
                           const VectorXd& ddz, VectorXd& e1, VectorXd& e2,
                           VectorXd& e3) {
    e1 = r1 - (at_ * ddy + gt_ * ddz);
    e2 = p_ > 0 ? VectorXd(r2 - prob_.A * ddx) : VectorXd();
    e3 = r3 - (prob_.G * ddx - apply_wsq(ddz));
    double norm = e1.cwiseAbs().maxCoeff();
    if (p_ > 0) norm = std::max(norm, e2.cwiseAbs().maxCoeff());
    norm = std::max(norm, e3.cwiseAbs().maxCoeff());
    return norm;
  };

  VectorXd e1, e2, e3;
  double best = residual_norm(dx, dy, dz, e1, e2, e3);
  if (st_.verbose && best > 1e-6 * scale)
    std::printf("    k3 first-pass: e1 %.2e e2 %.2e e3 %.2e scale %.2e\n",
                e1.cwiseAbs().maxCoeff(), p_ > 0 ? e2.cwiseAbs().maxCoeff() : 0.0,
                e3.cwiseAbs().maxCoeff(), scale);
  VectorXd bestx = dx, besty = dy, bestz = dz;
  const int max_passes = std::max(st_.refine_steps, 8);
  double prev = best;
  for (int pass = 0; pass < max_passes; ++pass) {
    if (best <= 1e-14 * scale) break;
    VectorXd cx, cy, cz;
    solve_k3_once(e1, e2, e3, cx, cy, cz);
    dx += cx;
    if (p_ > 0) dy += cy;
    dz += cz;
    double now = residual_norm(dx, dy, dz, e1, e2, e3);
    if (now < best) {
      best = now;
      bestx = dx;
      besty = dy;
      bestz = dz;
    }
    if (now > 0.5 * prev) break;  // no meaningful contraction left
    prev = now;
  }
  dx = bestx;
  dy = besty;
  dz = bestz;
  k3_quality_ = best / scale;
}

bool Hsd::initialize() {
  identity_scaling();
  if (!factor_kkt()) return false;

  VectorXd dx, dy, dz;
  // primal start: argmin ||s|| s.t. Au = b, Gu + s = h
  solve_k3(VectorXd::Zero(n_), prob_.b, prob_.h, dx, dy, dz);
  x_ = dx;
  s_ = -dz;
  double margin = cone_margin(s_);
  if (margin < 1e-6) cone_shift(s_, 1.0 - margin);

  // dual start
  VectorXd c_neg = -prob_.c;
  solve_k3(c_neg, VectorXd::Zero(p_), VectorXd::Zero(m_), dx, dy, dz);
  y_ = dy;
  z_ = dz;
  margin = cone_margin(z_);
  if (margin < 1e-6) cone_shift(z_, 1.0 - margin);

  tau_ = 1.0;
  kappa_ = 1.0;
  return true;
}

Solution Hsd::extract(Status status) const {
  Solution sol;
  bool use_best = status == Status::MaxIter;
  if (use_best && binfo_.primal_res <= st_.feas_tol &&
      binfo_.dual_res <= st_.feas_tol && binfo_.rel_gap <= st_.gap_tol)
    status = Status::Optimal;
  sol.status = status;
  const VectorXd& x = use_best ? bx_ : x_;
  const VectorXd& y = use_best ? by_ : y_;
  const VectorXd& z = use_best ? bz_ : z_;
  const VectorXd& s = use_best ? bs_ : s_;
  double tau = use_best ? btau_ : tau_;
  if (status == Status::PrimalInfeasible || status == Status::DualInfeasible) {
    // certificates, normalized
    sol.x = x;
    sol.y = y;
    sol.z = z;
    sol.s = s;
    sol.info = info_;
    return sol;
  }
  sol.x = x / tau;
  sol.y = y / tau;
  sol.z = z / tau;
  sol.s = s / tau;
  sol.primal_obj = prob_.c.dot(sol.x);
  sol.dual_obj = -(p_ > 0 ? prob_.b.dot(sol.y) : 0.0) - prob_.h.dot(sol.z);
  sol.info = use_best ? binfo_ : info_;
  return sol;
}

Solution Hsd::run() {
  if (!initialize()) {
    Solution sol;
    sol.status = Status::NumericalError;
    return sol;
  }

  const double degree = prob_.cones.degree() + 1.0;
  const VectorXd e = jordan_e();
  double prev_mu = kInf;
  int stall = 0;

  for (int it = 0; it <= st_.max_iter; ++it) {
    // residuals of the homogeneous system
    VectorXd rd = at_ * y_ + gt_ * z_ + prob_.c * tau_;
    VectorXd rp = p_ > 0 ? VectorXd(prob_.A * x_ - prob_.b * tau_) : VectorXd();
    VectorXd rg = prob_.G * x_ + s_ - prob_.h * tau_;
    double rt = prob_.c.dot(x_) + (p_ > 0 ? prob_.b.dot(y_) : 0.0) +
                prob_.h.dot(z_) + kappa_;
    double mu = (s_.dot(z_) + tau_ * kappa_) / degree;
    if (it == 0) mu0_ = mu;

    double pcost = prob_.c.dot(x_) / tau_;
    double gap = s_.dot(z_) / (tau_ * tau_);
    double relgap = gap / std::max(1.0, std::abs(pcost));
    double pres = 0.0;
    if (p_ > 0) pres = rp.cwiseAbs().maxCoeff() / (1.0 + norm_b_);
    if (m_ > 0) pres = std::max(pres, rg.cwiseAbs().maxCoeff() / (1.0 + norm_h_));
    pres /= tau_;
    double dres = rd.cwiseAbs().maxCoeff() / (1.0 + norm_c_) / tau_;

    info_.iterations = it;
    info_.primal_res = pres;
    info_.dual_res = dres;
    info_.rel_gap = relgap;
    info_.abs_gap = gap;
    info_.tau = tau_;
    info_.kappa = kappa_;

    if (st_.verbose)
      std::printf("it %3d  pres %9.2e  dres %9.2e  gap %9.2e  tau %8.2e  kappa %8.2e  mu %9.2e\n",
                  it, pres, dres, relgap, tau_, kappa_, mu);

    double score = std::max({pres, dres, relgap});
    if (score < best_score_) {
      best_score_ = score;
      bx_ = x_;
      by_ = y_;
      bz_ = z_;
      bs_ = s_;
      btau_ = tau_;
      bkappa_ = kappa_;
      binfo_ = info_;
    }

    if (pres <= st_.feas_tol && dres <= st_.feas_tol && relgap <= st_.gap_tol)
      return extract(Status::Optimal);
    // the late-stage KKT systems can become too ill-conditioned to solve;
    // once an iterate degrades sharply, the stored best one is the answer
    if (score > 1e3 * best_score_ && best_score_ < 1e-3) {
      if (st_.verbose) std::printf("  stop: iterate degraded\n");
      break;
    }

    // infeasibility certificates
    double hz_by = (p_ > 0 ? prob_.b.dot(y_) : 0.0) + prob_.h.dot(z_);
    if (hz_by < -1e-10) {
      double pinfres = rd.cwiseAbs().maxCoeff() / (-hz_by) / (1.0 + norm_c_);
      if (pinfres <= st_.feas_tol * 1e2 && tau_ <= 1e-8 * std::max(1.0, kappa_)) {
        info_.primal_res = pinfres;
        return extract(Status::PrimalInfeasible);
      }
    }
    double cx = prob_.c.dot(x_);
    if (cx < -1e-10) {
      double dinf1 = p_ > 0 ? (prob_.A * x_).cwiseAbs().maxCoeff() : 0.0;
      double dinf2 = (prob_.G * x_ + s_).cwiseAbs().maxCoeff();
      if (std::max(dinf1, dinf2) / (-cx) <= st_.feas_tol * 1e2 &&
          tau_ <= 1e-8 * std::max(1.0, kappa_))
        return extract(Status::DualInfeasible);
    }

    if (it == st_.max_iter) break;
    if (mu > prev_mu * 0.9999 && score > 1e3 * st_.feas_tol) {
      if (++stall >= 10) {
        if (st_.verbose) std::printf("  stop: stalled\n");
        break;
      }
    } else {
      stall = 0;
    }
    prev_mu = mu;

    try {
      compute_scaling();
    } catch (const std::exception&) {
      if (st_.verbose) std::printf("  stop: scaling failed\n");
      break;
    }
    if (!factor_kkt()) {
      if (st_.verbose) std::printf("  stop: kkt factorization failed\n");
      break;
    }

    // constant-column solve, reused for both directions
    VectorXd x2, y2, z2;
    solve_k3(-prob_.c, prob_.b, prob_.h, x2, y2, z2);
    double dot2 = prob_.c.dot(x2) + (p_ > 0 ? prob_.b.dot(y2) : 0.0) + prob_.h.dot(z2);

    auto direction = [&](double eta, const VectorXd& ds_target, double dk_target,
                         VectorXd& dx, VectorXd& dy, VectorXd& dz, VectorXd& ds,
                         double& dtau, double& dkappa) {
      VectorXd lam_inv_d = lambda_solve(ds_target);
      VectorXd rhs_g = -eta * rg - scale_wt(lam_inv_d);
      VectorXd x1, y1, z1;
      solve_k3(-eta * rd, p_ > 0 ? VectorXd(-eta * rp) : VectorXd(), rhs_g, x1, y1, z1);
      double dot1 = prob_.c.dot(x1) + (p_ > 0 ? prob_.b.dot(y1) : 0.0) + prob_.h.dot(z1);
      double rhs_t = -eta * rt - dk_target / tau_;
      dtau = (rhs_t - dot1) / (dot2 - kappa_ / tau_);
      dx = x1 + dtau * x2;
      dy = p_ > 0 ? VectorXd(y1 + dtau * y2) : VectorXd();
      dz = z1 + dtau * z2;
      ds = scale_wt(lam_inv_d - scale_w(dz));
      dkappa = (dk_target - kappa_ * dtau) / tau_;
    };

    // predictor
    VectorXd lam_lam = jordan_prod(w_.lambda, w_.lambda);
    VectorXd dxa, dya, dza, dsa;
    double dtaua, dkappaa;
    direction(1.0, -lam_lam, -tau_ * kappa_, dxa, dya, dza, dsa, dtaua, dkappaa);

    double alpha_a = std::min(max_step(s_, dsa), max_step(z_, dza));
    if (dtaua < 0.0) alpha_a = std::min(alpha_a, -tau_ / dtaua);
    if (dkappaa < 0.0) alpha_a = std::min(alpha_a, -kappa_ / dkappaa);
    alpha_a = std::min(alpha_a, 1.0);
    double sigma = std::pow(1.0 - alpha_a, 3.0);
    sigma = std::min(std::max(sigma, 1e-12), 0.9999);

    // corrector
    VectorXd ws = scale_winv_t(dsa);
    VectorXd wz = scale_w(dza);
    VectorXd ds_target = -lam_lam - jordan_prod(ws, wz) + sigma * mu * e;
    double dk_target = -tau_ * kappa_ - dtaua * dkappaa + sigma * mu;
    VectorXd dx, dy, dz, ds;
    double dtau, dkappa;
    direction(1.0 - sigma, ds_target, dk_target, dx, dy, dz, ds, dtau, dkappa);
    // a hopeless direction would only corrupt the iterate; mildly inexact
    // ones still make progress and the rollback guard covers the rest
    if (k3_quality_ > 1e-2) {
      if (st_.verbose) std::printf("  stop: direction quality %.2e\n", k3_quality_);
      break;
    }

    // algebra check on well-conditioned iterations; late-stage scalings are
    // too ill-conditioned to re-evaluate the equations to this accuracy
    if (st_.self_check && mu > 1e-4 * mu0_) {
      double tol = 1e-6 * (1.0 + norm_c_ + norm_b_ + norm_h_);
      VectorXd r1chk = at_ * dy + gt_ * dz + prob_.c * dtau + (1.0 - sigma) * rd;
      VectorXd r3chk = prob_.G * dx + ds - prob_.h * dtau + (1.0 - sigma) * rg;
      if (r1chk.cwiseAbs().maxCoeff() > tol || r3chk.cwiseAbs().maxCoeff() > tol)
        throw std::runtime_error("newton direction check failed");
    }

    double alpha = std::min(max_step(s_, ds), max_step(z_, dz));
    if (dtau < 0.0) alpha = std::min(alpha, -tau_ / dtau);
    if (dkappa < 0.0) alpha = std::min(alpha, -kappa_ / dkappa);
    alpha = std::min(1.0, st_.step_fraction * alpha);
    if (alpha <= 1e-8) {
      if (st_.verbose) std::printf("  stop: step %.2e\n", alpha);
      break;
    }

    x_ += alpha * dx;
    if (p_ > 0) y_ += alpha * dy;
    z_ += alpha * dz;
    s_ += alpha * ds;
    tau_ += alpha * dtau;
    kappa_ += alpha * dkappa;
  }

  return extract(Status::MaxIter);
}

}  // namespace

Solution solve(const Problem& prob, const Settings& settings) {
  Hsd solver(prob, settings);
  return solver.run();
}

}  // namespace gopf::conic
