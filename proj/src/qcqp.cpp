#include "gopf/qcqp.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace gopf {

double QuadConstraint::quad_value(const Eigen::VectorXd& x) const {
  double v = 0.0;
  for (const Entry& e : hessian)
    v += e.row == e.col ? e.value * x[e.row] * x[e.row]
                        : 2.0 * e.value * x[e.row] * x[e.col];
  return v;
}

Eigen::VectorXd QuadConstraint::quad_gradient(const Eigen::VectorXd& x) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
  for (const Entry& e : hessian) {
    if (e.row == e.col) {
      g[e.row] += 2.0 * e.value * x[e.row];
    } else {
      g[e.row] += 2.0 * e.value * x[e.col];
      g[e.col] += 2.0 * e.value * x[e.row];
    }
  }
  return g;
}

double QuadConstraint::linear_value(const Eigen::VectorXd& y) const {
  double v = 0.0;
  for (const auto& [idx, coef] : linear) v += coef * y[idx];
  return v;
}

void QuadConstraint::add_to_dense(Eigen::MatrixXd& m, double scale) const {
  for (const Entry& e : hessian) {
    m(e.row, e.col) += scale * e.value;
    if (e.row != e.col) m(e.col, e.row) += scale * e.value;
  }
}

Eigen::MatrixXd QuadConstraint::dense_hessian(int dim) const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
  add_to_dense(m, 1.0);
  return m;
}

double OpfQcqp::objective(const Eigen::VectorXd& y) const {
  double v = obj_constant;
  for (int g = 0; g < ngen; ++g)
    v += obj_quadratic[g] * y[g] * y[g] + obj_linear[g] * y[g];
  return v;
}

bool OpfQcqp::inside_bounds(const Point& pt, double tol) const {
  for (int i = 0; i < n; ++i) {
    double m = pt.x[i] * pt.x[i] + pt.x[i + n] * pt.x[i + n];
    if (m < v_lo[i] - tol || m > v_hi[i] + tol) return false;
  }
  for (int k = 0; k < 2 * ngen; ++k)
    if (pt.y[k] < y_lo[k] - tol || pt.y[k] > y_hi[k] + tol) return false;
  return true;
}

namespace {

// Accumulates symmetric entries, canonicalized to the upper triangle.
class HessianBuilder {
 public:
  void add(int a, int b, double v) {
    if (v == 0.0) return;
    if (a > b) std::swap(a, b);
    entries_[{a, b}] += v;
  }
  std::vector<QuadConstraint::Entry> take() const {
    std::vector<QuadConstraint::Entry> out;
    out.reserve(entries_.size());
    for (const auto& [key, v] : entries_)
      if (v != 0.0) out.push_back({key.first, key.second, v});
    return out;
  }

 private:
  std::map<std::pair<int, int>, double> entries_;
};

// Quadratic form of the active (p) or reactive (q) balance at bus i, built
// from row i of Y = G + jB:
//   P_i = sum_k G_ik (e_i e_k + f_i f_k) + B_ik (f_i e_k - e_i f_k)
//   Q_i = sum_k G_ik (f_i e_k - e_i f_k) - B_ik (e_i e_k + f_i f_k)
std::vector<QuadConstraint::Entry> balance_hessian(const AdmittanceMatrix& adm,
                                                   int i, int n, bool active) {
  HessianBuilder h;
  for (int k = 0; k < n; ++k) {
    double g = adm.g(i, k);
    double b = adm.b(i, k);
    if (g == 0.0 && b == 0.0) continue;
    if (k == i) {
      double d = active ? g : -b;
      h.add(i, i, d);
      h.add(i + n, i + n, d);
      continue;
    }
    // off-diagonal products contribute half to each mirror entry
    if (active) {
      h.add(i, k, g / 2.0);          // e_i e_k
      h.add(i + n, k + n, g / 2.0);  // f_i f_k
      h.add(i + n, k, b / 2.0);      // f_i e_k
      h.add(i, k + n, -b / 2.0);     // e_i f_k
    } else {
      h.add(i, k, -b / 2.0);
      h.add(i + n, k + n, -b / 2.0);
      h.add(i + n, k, g / 2.0);
      h.add(i, k + n, -g / 2.0);
    }
  }
  return h.take();
}

}  // namespace

OpfQcqp assemble_opf(const Network& net, const AdmittanceMatrix& adm) {
  if (adm.n != net.n)
    throw std::invalid_argument("admittance matrix does not match the network");

  OpfQcqp opf;
  opf.network = net;
  opf.n = net.n;
  opf.ngen = net.num_gens();
  opf.v_lo = net.v_lo;
  opf.v_hi = net.v_hi;
  opf.obj_quadratic = net.cost_quadratic;
  opf.obj_linear = net.cost_linear;
  opf.obj_constant = net.cost_constant;

  const int g = opf.ngen;
  opf.y_lo.resize(2 * g);
  opf.y_hi.resize(2 * g);
  for (int k = 0; k < g; ++k) {
    opf.y_lo[k] = net.p_lo[k];
    opf.y_hi[k] = net.p_hi[k];
    opf.y_lo[k + g] = net.q_lo[k];
    opf.y_hi[k + g] = net.q_hi[k];
  }

  auto make = [&](int bus, bool active, bool gen_bus) {
    QuadConstraint c;
    c.bus = bus;
    c.family = active ? (gen_bus ? QuadConstraint::Family::PGen
                                 : QuadConstraint::Family::PLoad)
                      : (gen_bus ? QuadConstraint::Family::QGen
                                 : QuadConstraint::Family::QLoad);
    c.hessian = balance_hessian(adm, bus, net.n, active);
    if (gen_bus) {
      for (int u = 0; u < g; ++u)
        if (net.gen_bus[u] == bus)
          c.linear.emplace_back(active ? u : u + g, -1.0);
    }
    c.rhs = active ? -net.p_demand[bus] : -net.q_demand[bus];
    return c;
  };

  for (int bus : net.gen_buses) opf.constraints.push_back(make(bus, true, true));
  for (int bus : net.gen_buses) opf.constraints.push_back(make(bus, false, true));
  for (int bus : net.load_buses) opf.constraints.push_back(make(bus, true, false));
  for (int bus : net.load_buses) opf.constraints.push_back(make(bus, false, false));
  return opf;
}

Eigen::VectorXd residual(const OpfQcqp& opf, const Point& pt) {
  const auto& cs = opf.constraints;
  Eigen::VectorXd r(cs.size());
  for (size_t i = 0; i < cs.size(); ++i)
    r[i] = cs[i].quad_value(pt.x) + cs[i].linear_value(pt.y) - cs[i].rhs;
  return r;
}

}  // namespace gopf
