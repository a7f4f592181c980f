#include "gopf/network.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace gopf {

bool Network::is_gen_bus(int bus) const {
  return std::binary_search(gen_buses.begin(), gen_buses.end(), bus);
}

int Network::internal_index(int external_id) const {
  for (int i = 0; i < n; ++i)
    if (bus_ids[i] == external_id) return i;
  return -1;
}

double Network::generation_cost(const std::vector<double>& p_pu) const {
  double total = cost_constant;
  for (size_t g = 0; g < p_pu.size(); ++g)
    total += cost_quadratic[g] * p_pu[g] * p_pu[g] + cost_linear[g] * p_pu[g];
  return total;
}

Network to_per_unit(const matpower::RawCase& raw) {
  using matpower::ParseError;
  if (raw.base_mva <= 0.0) throw ParseError("zero base MVA");
  for (const auto& b : raw.buses)
    if (b.type == matpower::BusType::Isolated)
      throw ParseError("bus " + std::to_string(b.id) +
                       " is isolated; remove it before conversion");

  Network net;
  net.name = raw.name;
  net.base_mva = raw.base_mva;
  net.n = static_cast<int>(raw.buses.size());
  const double base = raw.base_mva;

  std::map<int, int> to_internal;
  for (int i = 0; i < net.n; ++i) {
    const auto& b = raw.buses[i];
    to_internal[b.id] = i;
    net.bus_ids.push_back(b.id);
    net.p_demand.push_back(b.p_demand_mw / base);
    net.q_demand.push_back(b.q_demand_mvar / base);
    net.shunt_g.push_back(b.shunt_g_mw / base);
    net.shunt_b.push_back(b.shunt_b_mvar / base);
    // squared exactly once, here
    net.v_lo.push_back(b.v_min * b.v_min);
    net.v_hi.push_back(b.v_max * b.v_max);
  }

  std::map<int, int> units_at;  // internal bus -> in-service unit count
  for (size_t gi = 0; gi < raw.generators.size(); ++gi) {
    const auto& g = raw.generators[gi];
    if (!g.in_service) continue;
    int bus = to_internal.at(g.bus_id);
    units_at[bus] += 1;
    net.gen_bus.push_back(bus);
    net.p_lo.push_back(g.p_min_mw / base);
    net.p_hi.push_back(g.p_max_mw / base);
    net.q_lo.push_back(g.q_min_mvar / base);
    net.q_hi.push_back(g.q_max_mvar / base);
    double c2 = 0.0, c1 = 0.0, c0 = 0.0;
    for (const auto& c : raw.costs)
      if (c.gen_index == static_cast<int>(gi)) {
        c2 = c.c2;
        c1 = c.c1;
        c0 = c.c0;
      }
    if (c2 < 0.0)
      throw ParseError("generator at bus " + std::to_string(g.bus_id) +
                       " has a concave cost (negative quadratic coefficient)");
    // rescale so the cost of a per-unit injection keeps its $/h value
    net.cost_quadratic.push_back(c2 * base * base);
    net.cost_linear.push_back(c1 * base);
    net.cost_constant += c0;
  }
  for (const auto& [bus, count] : units_at)
    if (count > 1) net.multi_unit_buses.push_back(bus);

  std::set<int> genset;
  for (int b : net.gen_bus) genset.insert(b);
  for (int i = 0; i < net.n; ++i) {
    if (genset.count(i))
      net.gen_buses.push_back(i);
    else
      net.load_buses.push_back(i);
  }

  net.adjacency.resize(net.n);
  for (const auto& br : raw.branches) {
    if (!br.in_service) continue;
    Network::Branch nb;
    nb.from = to_internal.at(br.from_bus);
    nb.to = to_internal.at(br.to_bus);
    nb.r = br.series_r;
    nb.x = br.series_x;
    nb.b = br.charging_b;
    nb.tap = br.tap_ratio == 0.0 ? 1.0 : br.tap_ratio;
    nb.shift_rad = br.phase_shift_deg * M_PI / 180.0;
    net.branches.push_back(nb);
    net.adjacency[nb.from].push_back(nb.to);
    net.adjacency[nb.to].push_back(nb.from);
  }
  for (auto& nbrs : net.adjacency) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }
  return net;
}

}  // namespace gopf
