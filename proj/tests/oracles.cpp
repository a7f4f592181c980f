#include "oracles.hpp"

#include <cmath>
#include <complex>
#include <map>
#include <vector>

namespace oracles {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double min_eigenvalue_power(const MatrixXd& m, int max_iter, double tol) {
  const int d = static_cast<int>(m.rows());
  if (d == 0) return 0.0;
  // Gershgorin upper bound so that (shift I - M) is PSD with its largest
  // eigenvalue at shift - lambda_min(M)
  double shift = -1e300;
  for (int i = 0; i < d; ++i) {
    double radius = 0.0;
    for (int j = 0; j < d; ++j)
      if (j != i) radius += std::abs(m(i, j));
    shift = std::max(shift, m(i, i) + radius);
  }
  shift += 1.0;
  MatrixXd a = shift * MatrixXd::Identity(d, d) - m;
  VectorXd v = VectorXd::Ones(d).normalized();
  double prev = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    VectorXd w = a * v;
    double norm = w.norm();
    if (norm == 0.0) return shift;  // M == shift I
    v = w / norm;
    double rq = v.dot(a * v);
    if (std::abs(rq - prev) <= tol * (1.0 + std::abs(rq)) && it > 16) {
      prev = rq;
      break;
    }
    prev = rq;
  }
  return shift - prev;
}

DenseYbus ybus_reference(const gopf::matpower::RawCase& raw) {
  using cplx = std::complex<double>;
  const int n = static_cast<int>(raw.buses.size());
  std::map<int, int> idx;
  for (int i = 0; i < n; ++i) idx[raw.buses[i].id] = i;
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& br : raw.branches) {
    if (!br.in_service) continue;
    int f = idx.at(br.from_bus), t = idx.at(br.to_bus);
    cplx ys = 1.0 / cplx(br.series_r, br.series_x);
    cplx bc(0.0, br.charging_b / 2.0);
    double tap = br.tap_ratio == 0.0 ? 1.0 : br.tap_ratio;
    cplx a = tap * std::exp(cplx(0.0, br.phase_shift_deg * M_PI / 180.0));
    y(f, f) += (ys + bc) / (a * std::conj(a));
    y(f, t) += -ys / std::conj(a);
    y(t, f) += -ys / a;
    y(t, t) += ys + bc;
  }
  for (int i = 0; i < n; ++i)
    y(i, i) += cplx(raw.buses[i].shunt_g_mw, raw.buses[i].shunt_b_mvar) / raw.base_mva;
  DenseYbus out;
  out.g = y.real();
  out.b = y.imag();
  return out;
}

std::optional<gopf::Point> newton_power_flow(const gopf::matpower::RawCase& raw,
                                             const gopf::OpfQcqp& opf) {
  using gopf::matpower::BusType;
  const int n = static_cast<int>(raw.buses.size());
  DenseYbus y = ybus_reference(raw);
  std::map<int, int> idx;
  for (int i = 0; i < n; ++i) idx[raw.buses[i].id] = i;

  // bus classification from the case file
  int slack = -1;
  std::vector<bool> is_pv(n, false);
  for (int i = 0; i < n; ++i) {
    if (raw.buses[i].type == BusType::Ref) slack = i;
    if (raw.buses[i].type == BusType::PV) is_pv[i] = true;
  }
  if (slack < 0) return std::nullopt;

  // scheduled injections: generator setpoints are not in RawCase, so pick the
  // midpoint of the box for PV buses; the slack absorbs the mismatch
  std::vector<double> pset(n, 0.0), qset(n, 0.0), vset(n, 1.0);
  for (int i = 0; i < n; ++i) {
    pset[i] -= raw.buses[i].p_demand_mw / raw.base_mva;
    qset[i] -= raw.buses[i].q_demand_mvar / raw.base_mva;
  }
  for (const auto& g : raw.generators) {
    if (!g.in_service) continue;
    int i = idx.at(g.bus_id);
    if (i == slack) continue;
    pset[i] += 0.5 * (g.p_min_mw + g.p_max_mw) / raw.base_mva;
  }
  for (int i = 0; i < n; ++i)
    vset[i] = 0.5 * (raw.buses[i].v_min + raw.buses[i].v_max);

  std::vector<double> vm(n), va(n, 0.0);
  for (int i = 0; i < n; ++i) vm[i] = vset[i];

  auto inj = [&](int i, bool active) {
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
      double th = va[i] - va[k];
      double gc = y.g(i, k), bc = y.b(i, k);
      if (gc == 0.0 && bc == 0.0) continue;
      if (active)
        acc += vm[i] * vm[k] * (gc * std::cos(th) + bc * std::sin(th));
      else
        acc += vm[i] * vm[k] * (gc * std::sin(th) - bc * std::cos(th));
    }
    return acc;
  };

  // unknowns: angles at all non-slack buses, magnitudes at PQ buses
  std::vector<int> ath, vmag;
  for (int i = 0; i < n; ++i) {
    if (i != slack) ath.push_back(i);
    if (i != slack && !is_pv[i]) vmag.push_back(i);
  }
  const int nu = static_cast<int>(ath.size() + vmag.size());

  for (int it = 0; it < 60; ++it) {
    VectorXd mis(nu);
    int r = 0;
    for (int i : ath) mis[r++] = pset[i] - inj(i, true);
    for (int i : vmag) mis[r++] = qset[i] - inj(i, false);
    if (mis.cwiseAbs().maxCoeff() < 1e-11) break;
    if (it == 59) return std::nullopt;

    // numerical Jacobian is fine for oracle duty
    MatrixXd jac(nu, nu);
    const double hstep = 1e-7;
    int c = 0;
    auto fill_col = [&](double* slot) {
      double save = *slot;
      *slot = save + hstep;
      VectorXd mp(nu);
      int rr = 0;
      for (int i : ath) mp[rr++] = pset[i] - inj(i, true);
      for (int i : vmag) mp[rr++] = qset[i] - inj(i, false);
      *slot = save;
      jac.col(c) = (mp - mis) / hstep;
      ++c;
    };
    for (int i : ath) fill_col(&va[i]);
    for (int i : vmag) fill_col(&vm[i]);

    VectorXd step = jac.fullPivLu().solve(-mis);
    if (!step.allFinite()) return std::nullopt;
    c = 0;
    for (int i : ath) va[i] += step[c++];
    for (int i : vmag) vm[i] += step[c++];
  }

  gopf::Point pt;
  pt.x.resize(2 * n);
  for (int i = 0; i < n; ++i) {
    // raw file order matches internal order by construction of to_per_unit
    pt.x[i] = vm[i] * std::cos(va[i]);
    pt.x[i + n] = vm[i] * std::sin(va[i]);
  }
  // recover net generator injections from the converged flow
  pt.y = VectorXd::Zero(opf.ny());
  const auto& net = opf.network;
  std::vector<int> unit_of_bus(n, -1);
  for (int u = 0; u < net.num_gens(); ++u) unit_of_bus[net.gen_bus[u]] = u;
  for (int i = 0; i < n; ++i) {
    int u = unit_of_bus[i];
    if (u < 0) continue;
    pt.y[u] = inj(i, true) + raw.buses[i].p_demand_mw / raw.base_mva;
    pt.y[u + net.num_gens()] = inj(i, false) + raw.buses[i].q_demand_mvar / raw.base_mva;
  }
  return pt;
}

std::optional<GridResult> grid_search_2bus(const gopf::OpfQcqp& opf, double step) {
  if (opf.n != 2 || opf.ngen != 1) return std::nullopt;
  const auto& net = opf.network;
  const int gen_bus = net.gen_bus[0];
  const int load_bus = gen_bus == 0 ? 1 : 0;

  // locate the load-bus P and Q balance rows and the generator rows
  const gopf::QuadConstraint* load_p = nullptr;
  const gopf::QuadConstraint* load_q = nullptr;
  const gopf::QuadConstraint* gen_p = nullptr;
  const gopf::QuadConstraint* gen_q = nullptr;
  for (const auto& c : opf.constraints) {
    using F = gopf::QuadConstraint::Family;
    if (c.bus == load_bus && c.family == F::PLoad) load_p = &c;
    if (c.bus == load_bus && c.family == F::QLoad) load_q = &c;
    if (c.bus == gen_bus && c.family == F::PGen) gen_p = &c;
    if (c.bus == gen_bus && c.family == F::QGen) gen_q = &c;
  }
  if (!load_p || !load_q || !gen_p || !gen_q) return std::nullopt;

  // x layout: (e_0, e_1, f_0, f_1); slack angle fixed: f_gen = 0
  const double u2 = std::sqrt(opf.v_hi[load_bus]);
  const double u1hi = std::sqrt(opf.v_hi[gen_bus]);
  const double u1lo = std::sqrt(opf.v_lo[gen_bus]);

  // coefficient of e_gen in the load-bus active balance, as a function of
  // (e2, f2); the balance is linear in e_gen once f_gen = 0
  auto eval_quad = [&](const gopf::QuadConstraint& c, const VectorXd& x) {
    return c.quad_value(x);
  };

  double best = std::numeric_limits<double>::infinity();
  gopf::Point best_pt;
  VectorXd x = VectorXd::Zero(4);
  const double filter = 40.0 * step;  // manifold tolerance, scales with the grid

  for (double e2 = -u2; e2 <= u2 + 1e-12; e2 += step) {
    for (double f2 = -u2; f2 <= u2 + 1e-12; f2 += step) {
      double m2 = e2 * e2 + f2 * f2;
      if (m2 < opf.v_lo[load_bus] || m2 > opf.v_hi[load_bus]) continue;
      // load P balance: quad(e1; e2, f2) = rhs, linear in e1 with f1 = 0.
      // Evaluate at e1 = 0 and e1 = 1 to extract the linear map.
      x.setZero();
      x[load_bus] = e2;
      x[load_bus + 2] = f2;
      double at0 = eval_quad(*load_p, x);
      x[gen_bus] = 1.0;
      double at1 = eval_quad(*load_p, x);
      double slope = at1 - at0;  // no e1^2 term appears in the load row
      if (std::abs(slope) < 1e-12) continue;
      double e1 = (load_p->rhs - at0) / slope;
      if (std::abs(e1) > u1hi || std::abs(e1) < u1lo) continue;
      x[gen_bus] = e1;
      // remaining load-bus reactive balance acts as the manifold filter
      double qres = eval_quad(*load_q, x) - load_q->rhs;
      if (std::abs(qres) > filter) continue;
      // recover the generator injections from its balances
      double p1 = eval_quad(*gen_p, x) - gen_p->rhs;  // +p enters with -1
      double q1 = eval_quad(*gen_q, x) - gen_q->rhs;
      VectorXd yv(2);
      yv << p1, q1;
      if (p1 < opf.y_lo[0] - 1e-9 || p1 > opf.y_hi[0] + 1e-9) continue;
      if (q1 < opf.y_lo[1] - 1e-9 || q1 > opf.y_hi[1] + 1e-9) continue;
      double cost = opf.objective(yv);
      if (cost < best) {
        best = cost;
        best_pt.x = x;
        best_pt.y = yv;
      }
    }
  }
  if (!std::isfinite(best)) return std::nullopt;
  return GridResult{best, best_pt};
}

std::string data_file(const std::string& name) {
  return std::string(GOPF_DATA_DIR) + "/" + name;
}

}  // namespace oracles
