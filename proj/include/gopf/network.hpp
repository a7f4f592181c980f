#pragma once

#include <string>
#include <vector>

#include "gopf/matpower.hpp"

namespace gopf {

/// Per-unit electrical model. All quantities are normalized on base_mva;
/// voltage-magnitude bounds are stored squared so they compare directly
/// against e^2 + f^2. Injections are kept per generator unit: a bus with
/// several units contributes the sum of their injections to its balance.
struct Network {
  std::string name;
  double base_mva = 0.0;
  int n = 0;  // bus count

  std::vector<int> bus_ids;                 // external id per internal index
  std::vector<int> gen_buses;               // ordered set of generator buses
  std::vector<int> load_buses;              // ordered set of the remaining buses
  std::vector<std::vector<int>> adjacency;  // neighbor sets

  // per-generator (in-service units, file order)
  std::vector<int> gen_bus;             // internal bus of each unit
  std::vector<double> cost_quadratic;   // $/pu^2 h, nonnegative
  std::vector<double> cost_linear;      // $/pu h
  double cost_constant = 0.0;           // sum of constant cost terms, $/h
  std::vector<double> p_lo, p_hi;       // active injection bounds, pu
  std::vector<double> q_lo, q_hi;       // reactive injection bounds, pu

  // per-bus
  std::vector<double> v_lo, v_hi;            // bounds on SQUARED magnitude, pu^2
  std::vector<double> p_demand, q_demand;    // fixed load, pu
  std::vector<double> shunt_g, shunt_b;      // shunt conductance/susceptance, pu

  struct Branch {
    int from = 0, to = 0;
    double r = 0.0, x = 0.0, b = 0.0;
    double tap = 1.0;        // nominal = 1
    double shift_rad = 0.0;  // phase shift, radians, applied on the from side
  };
  std::vector<Branch> branches;  // in-service only, internal bus indices

  // buses carrying more than one in-service unit (kept for run metadata)
  std::vector<int> multi_unit_buses;

  int num_gens() const { return static_cast<int>(gen_bus.size()); }
  bool is_gen_bus(int bus) const;
  int internal_index(int external_id) const;  // -1 when unknown

  /// Generation cost in $/h for per-unit injections p (one entry per unit),
  /// including the constant term.
  double generation_cost(const std::vector<double>& p_pu) const;
};

/// Convert a validated raw case to the per-unit model. Out-of-service
/// equipment is dropped; buses holding at least one in-service unit form the
/// generator set. Throws matpower::ParseError on isolated buses or a zero
/// base.
Network to_per_unit(const matpower::RawCase& raw);

}  // namespace gopf
