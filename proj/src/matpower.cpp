#include "gopf/matpower.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace gopf::matpower {

namespace {

struct Row {
  int line;  // 1-based line number of the row start
  std::vector<double> values;
};

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ParseError("line " + std::to_string(line) + ": " + msg);
}

std::string strip_comment(const std::string& line) {
  auto pos = line.find('%');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

// Extracts the token list of a matrix block "mpc.<key> = [ ... ];".
// Rows are delimited by ';' or newlines.
std::vector<Row> parse_matrix(const std::vector<std::string>& lines,
                              const std::string& key, bool* found) {
  std::vector<Row> rows;
  *found = false;
  const std::string needle = "mpc." + key;
  for (size_t li = 0; li < lines.size(); ++li) {
    std::string text = strip_comment(lines[li]);
    auto kpos = text.find(needle);
    if (kpos == std::string::npos) continue;
    // require '=' and '[' after key
    auto eq = text.find('=', kpos + needle.size());
    if (eq == std::string::npos) continue;
    auto open = text.find('[', eq);
    size_t i = li;
    std::string cur = open == std::string::npos ? "" : text.substr(open + 1);
    if (open == std::string::npos) {
      // '[' expected on a following line
      ++i;
      while (i < lines.size()) {
        std::string t = strip_comment(lines[i]);
        auto p = t.find('[');
        if (p != std::string::npos) {
          cur = t.substr(p + 1);
          break;
        }
        if (t.find_first_not_of(" \t\r") != std::string::npos)
          fail(static_cast<int>(i + 1), "expected '[' to open mpc." + key);
        ++i;
      }
      if (i == lines.size()) fail(static_cast<int>(li + 1), "unterminated mpc." + key);
    }
    *found = true;
    Row row{static_cast<int>(i + 1), {}};
    bool done = false;
    while (!done) {
      for (size_t p = 0; p < cur.size(); ++p) {
        char ch = cur[p];
        if (ch == ']') {
          done = true;
          break;
        }
        if (ch == ';' || ch == '\n') {
          if (!row.values.empty()) rows.push_back(row);
          row = Row{static_cast<int>(i + 1), {}};
          continue;
        }
        if (std::isspace(static_cast<unsigned char>(ch)) || ch == ',') continue;
        // number token
        size_t q = p;
        while (q < cur.size() && !std::isspace(static_cast<unsigned char>(cur[q])) &&
               cur[q] != ';' && cur[q] != ',' && cur[q] != ']')
          ++q;
        std::string tok = cur.substr(p, q - p);
        try {
          size_t used = 0;
          double v = std::stod(tok, &used);
          if (used != tok.size()) throw std::invalid_argument(tok);
          row.values.push_back(v);
        } catch (const std::exception&) {
          fail(static_cast<int>(i + 1), "malformed entry '" + tok + "' in mpc." + key);
        }
        p = q - 1;
      }
      if (done) break;
      ++i;
      if (i >= lines.size()) fail(row.line, "unterminated mpc." + key);
      cur = strip_comment(lines[i]);
      if (!row.values.empty()) {
        rows.push_back(row);
        row = Row{static_cast<int>(i + 1), {}};
      } else {
        row.line = static_cast<int>(i + 1);
      }
    }
    if (!row.values.empty()) rows.push_back(row);
    return rows;
  }
  return rows;
}

double scalar_field(const std::vector<std::string>& lines, const std::string& key,
                    bool* found) {
  const std::string needle = "mpc." + key;
  for (size_t li = 0; li < lines.size(); ++li) {
    std::string text = strip_comment(lines[li]);
    auto kpos = text.find(needle);
    if (kpos == std::string::npos) continue;
    auto eq = text.find('=', kpos + needle.size());
    if (eq == std::string::npos) continue;
    std::string rest = text.substr(eq + 1);
    std::replace(rest.begin(), rest.end(), ';', ' ');
    std::istringstream is(rest);
    double v;
    if (!(is >> v)) fail(static_cast<int>(li + 1), "malformed scalar mpc." + key);
    *found = true;
    return v;
  }
  *found = false;
  return 0.0;
}

void need(const Row& row, size_t count, const std::string& what) {
  if (row.values.size() < count)
    fail(row.line, what + " row has " + std::to_string(row.values.size()) +
                       " columns, expected at least " + std::to_string(count));
}

}  // namespace

RawCase parse_case(const std::string& source, const std::string& name) {
  std::vector<std::string> lines;
  {
    std::istringstream is(source);
    std::string line;
    while (std::getline(is, line)) lines.push_back(line);
  }

  RawCase raw;
  raw.name = name;
  bool found = false;
  raw.base_mva = scalar_field(lines, "baseMVA", &found);
  if (!found) throw ParseError("missing required scalar mpc.baseMVA");

  auto bus_rows = parse_matrix(lines, "bus", &found);
  if (!found) throw ParseError("missing required block mpc.bus");
  for (const Row& r : bus_rows) {
    need(r, 13, "bus");
    RawBus b;
    b.id = static_cast<int>(r.values[0]);
    int t = static_cast<int>(r.values[1]);
    if (t < 1 || t > 4) fail(r.line, "unknown bus type " + std::to_string(t));
    b.type = static_cast<BusType>(t);
    b.p_demand_mw = r.values[2];
    b.q_demand_mvar = r.values[3];
    b.shunt_g_mw = r.values[4];
    b.shunt_b_mvar = r.values[5];
    b.v_max = r.values[11];
    b.v_min = r.values[12];
    raw.buses.push_back(b);
  }

  auto gen_rows = parse_matrix(lines, "gen", &found);
  if (!found) throw ParseError("missing required block mpc.gen");
  for (const Row& r : gen_rows) {
    need(r, 10, "gen");
    RawGen g;
    g.bus_id = static_cast<int>(r.values[0]);
    g.q_max_mvar = r.values[3];
    g.q_min_mvar = r.values[4];
    g.in_service = r.values[7] > 0.5;
    g.p_max_mw = r.values[8];
    g.p_min_mw = r.values[9];
    raw.generators.push_back(g);
  }

  auto br_rows = parse_matrix(lines, "branch", &found);
  if (!found) throw ParseError("missing required block mpc.branch");
  for (const Row& r : br_rows) {
    need(r, 11, "branch");
    RawBranch br;
    br.from_bus = static_cast<int>(r.values[0]);
    br.to_bus = static_cast<int>(r.values[1]);
    br.series_r = r.values[2];
    br.series_x = r.values[3];
    br.charging_b = r.values[4];
    br.tap_ratio = r.values[8];
    br.phase_shift_deg = r.values[9];
    br.in_service = r.values[10] > 0.5;
    raw.branches.push_back(br);
  }

  auto cost_rows = parse_matrix(lines, "gencost", &found);
  if (!found) throw ParseError("missing required block mpc.gencost");
  // MATPOWER allows ngen rows (active power costs) or 2*ngen rows (reactive
  // costs appended); only the first ngen rows are used.
  size_t ngen = raw.generators.size();
  if (cost_rows.size() != ngen && cost_rows.size() != 2 * ngen)
    fail(cost_rows.empty() ? 0 : cost_rows.front().line,
         "mpc.gencost has " + std::to_string(cost_rows.size()) +
             " rows for " + std::to_string(ngen) + " generators");
  for (size_t gi = 0; gi < ngen; ++gi) {
    const Row& r = cost_rows[gi];
    need(r, 4, "gencost");
    int model = static_cast<int>(r.values[0]);
    if (model == 1)
      fail(r.line, "piecewise-linear cost model is not supported; "
                   "only polynomial models of degree <= 2 are accepted");
    if (model != 2) fail(r.line, "unknown cost model " + std::to_string(model));
    int ncoef = static_cast<int>(r.values[3]);
    if (ncoef > 3)
      fail(r.line, "polynomial cost of degree " + std::to_string(ncoef - 1) +
                       " is not supported (degree <= 2 required)");
    if (ncoef < 0 || r.values.size() < 4 + static_cast<size_t>(ncoef))
      fail(r.line, "gencost row is missing coefficients");
    RawCost c;
    c.gen_index = static_cast<int>(gi);
    // coefficients are highest order first; pad lower-degree models
    double coef[3] = {0.0, 0.0, 0.0};  // c2, c1, c0
    for (int k = 0; k < ncoef; ++k) coef[3 - ncoef + k] = r.values[4 + k];
    c.c2 = coef[0];
    c.c1 = coef[1];
    c.c0 = coef[2];
    raw.costs.push_back(c);
  }

  validate(raw);
  return raw;
}

RawCase parse_case_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open case file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string name = path;
  auto slash = name.find_last_of('/');
  if (slash != std::string::npos) name = name.substr(slash + 1);
  auto dot = name.rfind(".m");
  if (dot != std::string::npos && dot == name.size() - 2) name = name.substr(0, dot);
  return parse_case(ss.str(), name);
}

void validate(const RawCase& raw) {
  if (raw.base_mva <= 0.0) throw ParseError("base MVA must be positive");
  std::set<int> ids;
  for (const RawBus& b : raw.buses) {
    if (!ids.insert(b.id).second)
      throw ParseError("duplicate bus id " + std::to_string(b.id));
    if (b.v_min > b.v_max)
      throw ParseError("bus " + std::to_string(b.id) + ": v_min > v_max");
  }
  for (const RawGen& g : raw.generators) {
    if (!ids.count(g.bus_id))
      throw ParseError("generator references unknown bus " + std::to_string(g.bus_id));
    if (g.p_min_mw > g.p_max_mw || g.q_min_mvar > g.q_max_mvar)
      throw ParseError("generator at bus " + std::to_string(g.bus_id) +
                       " has inverted bounds");
  }
  for (const RawBranch& br : raw.branches) {
    if (!ids.count(br.from_bus) || !ids.count(br.to_bus))
      throw ParseError("branch references unknown bus");
    if (br.in_service && br.series_r == 0.0 && br.series_x == 0.0)
      throw ParseError("in-service branch " + std::to_string(br.from_bus) + "-" +
                       std::to_string(br.to_bus) + " has zero series impedance");
  }
}

std::string emit_case(const RawCase& raw) {
  std::ostringstream os;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::string(buf);
  };
  os << "function mpc = " << (raw.name.empty() ? "case_unnamed" : raw.name) << "\n";
  os << "mpc.version = '2';\n";
  os << "mpc.baseMVA = " << num(raw.base_mva) << ";\n\n";
  os << "%% bus data\n%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin\n";
  os << "mpc.bus = [\n";
  for (const RawBus& b : raw.buses) {
    os << "\t" << b.id << "\t" << static_cast<int>(b.type) << "\t"
       << num(b.p_demand_mw) << "\t" << num(b.q_demand_mvar) << "\t"
       << num(b.shunt_g_mw) << "\t" << num(b.shunt_b_mvar)
       << "\t1\t1\t0\t0\t1\t" << num(b.v_max) << "\t" << num(b.v_min) << ";\n";
  }
  os << "];\n\n%% generator data\n%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin\n";
  os << "mpc.gen = [\n";
  for (const RawGen& g : raw.generators) {
    os << "\t" << g.bus_id << "\t0\t0\t" << num(g.q_max_mvar) << "\t"
       << num(g.q_min_mvar) << "\t1\t" << num(raw.base_mva) << "\t"
       << (g.in_service ? 1 : 0) << "\t" << num(g.p_max_mw) << "\t"
       << num(g.p_min_mw) << ";\n";
  }
  os << "];\n\n%% branch data\n%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\n";
  os << "mpc.branch = [\n";
  for (const RawBranch& br : raw.branches) {
    os << "\t" << br.from_bus << "\t" << br.to_bus << "\t" << num(br.series_r)
       << "\t" << num(br.series_x) << "\t" << num(br.charging_b) << "\t0\t0\t0\t"
       << num(br.tap_ratio) << "\t" << num(br.phase_shift_deg) << "\t"
       << (br.in_service ? 1 : 0) << ";\n";
  }
  os << "];\n\n%% generator cost data\n%\t2\tstartup\tshutdown\tn\tc2\tc1\tc0\n";
  os << "mpc.gencost = [\n";
  for (const RawCost& c : raw.costs) {
    os << "\t2\t0\t0\t3\t" << num(c.c2) << "\t" << num(c.c1) << "\t" << num(c.c0)
       << ";\n";
  }
  os << "];\n";
  return os.str();
}

}  // namespace gopf::matpower
