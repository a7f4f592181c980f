#pragma once

// Independent test oracles. Everything here is implemented from first
// principles on purpose and must stay decoupled from the library code paths
// it is used to check.

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "gopf/matpower.hpp"
#include "gopf/qcqp.hpp"

namespace oracles {

// Smallest eigenvalue via Gershgorin shift + power iteration.
double min_eigenvalue_power(const Eigen::MatrixXd& m, int max_iter = 20000,
                            double tol = 1e-12);

// Complex bus admittance from the textbook per-branch formula, built directly
// from the raw case (dense, per-unit).
struct DenseYbus {
  Eigen::MatrixXd g, b;
};
DenseYbus ybus_reference(const gopf::matpower::RawCase& raw);

// Newton-Raphson AC power flow in polar coordinates on the raw case.
// Returns voltages (e, f) and per-unit net generator injections mapped onto
// the qcqp layout, or nullopt when the iteration fails.
std::optional<gopf::Point> newton_power_flow(const gopf::matpower::RawCase& raw,
                                             const gopf::OpfQcqp& opf);

// Brute-force global optimum for 2-bus single-generator cases: grid over the
// load-bus voltage (e2, f2) with the slack angle fixed to zero, slack e1
// recovered from the load active balance, remaining balances filtered, cost
// minimized. Returns the best objective value in $/h.
struct GridResult {
  double value;
  gopf::Point point;
};
std::optional<GridResult> grid_search_2bus(const gopf::OpfQcqp& opf, double step);

std::string data_file(const std::string& name);

}  // namespace oracles
