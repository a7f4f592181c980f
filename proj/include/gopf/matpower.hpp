#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gopf::matpower {

enum class BusType { PQ = 1, PV = 2, Ref = 3, Isolated = 4 };

struct RawBus {
  int id = 0;
  BusType type = BusType::PQ;
  double p_demand_mw = 0.0;
  double q_demand_mvar = 0.0;
  double shunt_g_mw = 0.0;    // MW consumed at V = 1 pu
  double shunt_b_mvar = 0.0;  // MVAr injected at V = 1 pu
  double v_max = 0.0;         // pu magnitude
  double v_min = 0.0;
};

struct RawGen {
  int bus_id = 0;
  double p_min_mw = 0.0, p_max_mw = 0.0;
  double q_min_mvar = 0.0, q_max_mvar = 0.0;
  bool in_service = true;
};

struct RawBranch {
  int from_bus = 0, to_bus = 0;
  double series_r = 0.0, series_x = 0.0;  // pu
  double charging_b = 0.0;                // total line charging susceptance, pu
  double tap_ratio = 0.0;                 // 0 means nominal (1.0)
  double phase_shift_deg = 0.0;
  bool in_service = true;
};

/// Polynomial degree-2 cost, $ / MW-scale. Lower-degree models are
/// zero-padded at parse time; piecewise-linear models are rejected.
struct RawCost {
  int gen_index = 0;
  double c2 = 0.0, c1 = 0.0, c0 = 0.0;
};

struct RawCase {
  std::string name;
  double base_mva = 0.0;
  std::vector<RawBus> buses;
  std::vector<RawGen> generators;
  std::vector<RawBranch> branches;
  std::vector<RawCost> costs;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parse MATPOWER case text (mpc.baseMVA, mpc.bus, mpc.gen, mpc.branch,
/// mpc.gencost). Comments and arbitrary whitespace are tolerated; columns
/// beyond the documented ones are ignored. Out-of-service equipment is
/// retained but flagged. Throws ParseError with a line number on malformed
/// rows, on missing blocks and on unsupported cost models.
RawCase parse_case(const std::string& source, const std::string& name = "");

RawCase parse_case_file(const std::string& path);

/// Serialize back to MATPOWER case text. parse_case(emit_case(c)) == c.
std::string emit_case(const RawCase& raw);

/// Structural invariants: known bus ids on branches/generators, ordered
/// bounds, positive base, nonzero series impedance on in-service branches.
void validate(const RawCase& raw);

}  // namespace gopf::matpower
