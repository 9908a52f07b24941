// Power-grid case model: parsing, validation, admittance construction.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/SparseCore>
#include <json.hpp>

namespace smartpg {

using Complex = std::complex<double>;
using SparseC = Eigen::SparseMatrix<Complex>;
using SparseD = Eigen::SparseMatrix<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

struct CaseError : std::runtime_error {
  explicit CaseError(const std::string& what) : std::runtime_error(what) {}
};

enum class BusKind { PQ, PV, REF };

// Angles are radians internally; file formats carry degrees.
struct Bus {
  int id = 0;
  BusKind kind = BusKind::PQ;
  double pd = 0, qd = 0;      // MW / MVAr
  double gs = 0, bs = 0;      // MW / MVAr at 1 p.u.
  double vm_min = 0.9, vm_max = 1.1;
  double vm0 = 1.0, va0 = 0;  // p.u., rad
};

struct Generator {
  int bus = 0;
  double pmin = 0, pmax = 0;  // MW
  double qmin = 0, qmax = 0;  // MVAr
  double pg0 = 0, qg0 = 0;
  bool status = true;
  std::vector<double> cost;   // c_n .. c_0, $/hr as function of Pg in MW
};

struct Branch {
  int from = 0, to = 0;
  double r = 0, x = 0, b = 0;
  double tap = 0;             // 0 means nominal 1.0
  double shift = 0;           // rad
  double rate_a = 0;          // MVA, 0 means unlimited
  bool status = true;
};

struct Dimensions {
  int n_bus = 0;
  int n_gen = 0;     // in-service generators
  int n_branch = 0;  // all branches
  int n_x = 0;       // 2*n_bus + 2*n_gen
  int n_eq = 0;      // 2*n_bus + 1
  int n_ineq = 0;    // flow rows + enforced finite bounds
};

class GridCase {
 public:
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Generator> gens;
  std::vector<Branch> branches;

  int bus_index(int id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw CaseError("unknown bus id " + std::to_string(id));
    return it->second;
  }

  int ref_index() const {
    for (size_t i = 0; i < buses.size(); ++i)
      if (buses[i].kind == BusKind::REF) return static_cast<int>(i);
    throw CaseError("no reference bus");
  }

  // In-service generator positions in `gens` order.
  std::vector<int> active_gens() const {
    std::vector<int> out;
    for (size_t g = 0; g < gens.size(); ++g)
      if (gens[g].status) out.push_back(static_cast<int>(g));
    return out;
  }

  void validate() {
    if (!(base_mva > 0)) throw CaseError("base_mva must be positive");
    index_.clear();
    int n_ref = 0;
    for (size_t i = 0; i < buses.size(); ++i) {
      const Bus& b = buses[i];
      if (index_.count(b.id)) throw CaseError("duplicate bus id " + std::to_string(b.id));
      index_[b.id] = static_cast<int>(i);
      if (!(b.vm_min > 0)) throw CaseError("vm_min must be positive at bus " + std::to_string(b.id));
      if (b.vm_min > b.vm_max) throw CaseError("vm_min > vm_max at bus " + std::to_string(b.id));
      if (b.kind == BusKind::REF) ++n_ref;
    }
    if (n_ref != 1)
      throw CaseError("expected exactly one REF bus, found " + std::to_string(n_ref));
    for (const Generator& g : gens) {
      bus_index(g.bus);
      if (g.pmin > g.pmax) throw CaseError("gen pmin > pmax at bus " + std::to_string(g.bus));
      if (g.qmin > g.qmax) throw CaseError("gen qmin > qmax at bus " + std::to_string(g.bus));
      if (g.cost.empty()) throw CaseError("gen at bus " + std::to_string(g.bus) + " has empty cost");
    }
    for (const Branch& br : branches) {
      bus_index(br.from);
      bus_index(br.to);
      if (br.from == br.to) throw CaseError("branch from == to at bus " + std::to_string(br.from));
      if (br.status && br.x == 0) throw CaseError("in-service branch with x = 0");
    }
  }

 private:
  std::map<int, int> index_;
};

namespace detail {

inline double get_num(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw CaseError(std::string("missing field '") + key + "'");
  if (!j[key].is_number()) throw CaseError(std::string("field '") + key + "' is not a number");
  return j[key].get<double>();
}

inline BusKind parse_kind(const nlohmann::json& j) {
  if (!j.contains("kind") || !j["kind"].is_string())
    throw CaseError("bus 'kind' missing or not a string");
  std::string s = j["kind"].get<std::string>();
  if (s == "pq") return BusKind::PQ;
  if (s == "pv") return BusKind::PV;
  if (s == "ref") return BusKind::REF;
  throw CaseError("unknown bus kind '" + s + "'");
}

}  // namespace detail

inline GridCase parse_case_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw CaseError(std::string("invalid JSON: ") + e.what());
  }
  GridCase c;
  if (!j.is_object()) throw CaseError("top level must be an object");
  c.base_mva = detail::get_num(j, "base_mva");
  if (!j.contains("buses") || !j["buses"].is_array()) throw CaseError("missing 'buses' array");
  if (!j.contains("gens") || !j["gens"].is_array()) throw CaseError("missing 'gens' array");
  if (!j.contains("branches") || !j["branches"].is_array()) throw CaseError("missing 'branches' array");
  for (const auto& jb : j["buses"]) {
    Bus b;
    b.id = static_cast<int>(detail::get_num(jb, "id"));
    b.kind = detail::parse_kind(jb);
    b.pd = detail::get_num(jb, "pd");
    b.qd = detail::get_num(jb, "qd");
    b.gs = detail::get_num(jb, "gs");
    b.bs = detail::get_num(jb, "bs");
    b.vm_min = detail::get_num(jb, "vm_min");
    b.vm_max = detail::get_num(jb, "vm_max");
    b.vm0 = detail::get_num(jb, "vm0");
    b.va0 = deg2rad(detail::get_num(jb, "va0"));
    c.buses.push_back(b);
  }
  for (const auto& jg : j["gens"]) {
    Generator g;
    g.bus = static_cast<int>(detail::get_num(jg, "bus"));
    g.pmin = detail::get_num(jg, "pmin");
    g.pmax = detail::get_num(jg, "pmax");
    g.qmin = detail::get_num(jg, "qmin");
    g.qmax = detail::get_num(jg, "qmax");
    g.pg0 = detail::get_num(jg, "pg0");
    g.qg0 = detail::get_num(jg, "qg0");
    if (!jg.contains("status")) throw CaseError("gen missing 'status'");
    g.status = jg["status"].get<int>() != 0;
    if (!jg.contains("cost") || !jg["cost"].is_array()) throw CaseError("gen missing 'cost' array");
    for (const auto& cc : jg["cost"]) g.cost.push_back(cc.get<double>());
    c.gens.push_back(g);
  }
  for (const auto& jb : j["branches"]) {
    Branch br;
    br.from = static_cast<int>(detail::get_num(jb, "from"));
    br.to = static_cast<int>(detail::get_num(jb, "to"));
    br.r = detail::get_num(jb, "r");
    br.x = detail::get_num(jb, "x");
    br.b = detail::get_num(jb, "b");
    br.tap = detail::get_num(jb, "tap");
    br.shift = deg2rad(detail::get_num(jb, "shift"));
    br.rate_a = detail::get_num(jb, "rate_a");
    if (!jb.contains("status")) throw CaseError("branch missing 'status'");
    br.status = jb["status"].get<int>() != 0;
    c.branches.push_back(br);
  }
  c.validate();
  return c;
}

inline nlohmann::json serialize_case(const GridCase& c) {
  nlohmann::json j;
  j["base_mva"] = c.base_mva;
  j["buses"] = nlohmann::json::array();
  for (const Bus& b : c.buses) {
    const char* kind = b.kind == BusKind::PQ ? "pq" : (b.kind == BusKind::PV ? "pv" : "ref");
    j["buses"].push_back({{"id", b.id}, {"kind", kind}, {"pd", b.pd}, {"qd", b.qd},
                          {"gs", b.gs}, {"bs", b.bs}, {"vm_min", b.vm_min}, {"vm_max", b.vm_max},
                          {"vm0", b.vm0}, {"va0", rad2deg(b.va0)}});
  }
  j["gens"] = nlohmann::json::array();
  for (const Generator& g : c.gens) {
    j["gens"].push_back({{"bus", g.bus}, {"pmin", g.pmin}, {"pmax", g.pmax}, {"qmin", g.qmin},
                         {"qmax", g.qmax}, {"pg0", g.pg0}, {"qg0", g.qg0},
                         {"status", g.status ? 1 : 0}, {"cost", g.cost}});
  }
  j["branches"] = nlohmann::json::array();
  for (const Branch& br : c.branches) {
    j["branches"].push_back({{"from", br.from}, {"to", br.to}, {"r", br.r}, {"x", br.x},
                             {"b", br.b}, {"tap", br.tap}, {"shift", rad2deg(br.shift)},
                             {"rate_a", br.rate_a}, {"status", br.status ? 1 : 0}});
  }
  return j;
}

// MATPOWER .m import, restricted to numeric matrix literals and polynomial
// gencost (model 2).
namespace detail {

inline std::vector<std::vector<double>> parse_matrix(const std::string& text,
                                                     const std::string& name) {
  std::string key = "mpc." + name;
  size_t pos = text.find(key);
  if (pos == std::string::npos) throw CaseError("matrix '" + key + "' not found");
  pos = text.find('[', pos);
  if (pos == std::string::npos) throw CaseError("malformed matrix literal for " + key);
  size_t end = text.find(']', pos);
  if (end == std::string::npos) throw CaseError("unterminated matrix literal for " + key);
  std::string body = text.substr(pos + 1, end - pos - 1);
  // Strip comments.
  std::string clean;
  for (size_t i = 0; i < body.size(); ++i) {
    if (body[i] == '%') {
      while (i < body.size() && body[i] != '\n') ++i;
    }
    if (i < body.size()) clean.push_back(body[i]);
  }
  std::vector<std::vector<double>> rows;
  std::vector<double> row;
  std::string tok;
  auto flush_tok = [&]() {
    if (tok.empty()) return;
    try {
      size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      row.push_back(v);
    } catch (const std::exception&) {
      throw CaseError("non-numeric entry '" + tok + "' in " + key);
    }
    tok.clear();
  };
  auto flush_row = [&]() {
    flush_tok();
    if (!row.empty()) {
      rows.push_back(row);
      row.clear();
    }
  };
  for (char ch : clean) {
    if (ch == ';' || ch == '\n') {
      flush_row();
    } else if (ch == ' ' || ch == '\t' || ch == ',' || ch == '\r') {
      flush_tok();
    } else {
      tok.push_back(ch);
    }
  }
  flush_row();
  return rows;
}

inline double parse_scalar(const std::string& text, const std::string& name) {
  std::string key = "mpc." + name;
  size_t pos = text.find(key);
  if (pos == std::string::npos) throw CaseError("scalar '" + key + "' not found");
  pos = text.find('=', pos);
  size_t end = text.find(';', pos);
  std::string tok = text.substr(pos + 1, end - pos - 1);
  return std::stod(tok);
}

}  // namespace detail

inline GridCase import_matpower_m(const std::string& text) {
  GridCase c;
  c.base_mva = detail::parse_scalar(text, "baseMVA");
  auto bus = detail::parse_matrix(text, "bus");
  auto gen = detail::parse_matrix(text, "gen");
  auto branch = detail::parse_matrix(text, "branch");
  auto gencost = detail::parse_matrix(text, "gencost");
  for (const auto& r : bus) {
    if (r.size() < 13) throw CaseError("bus row too short");
    Bus b;
    b.id = static_cast<int>(r[0]);
    int type = static_cast<int>(r[1]);
    if (type == 3) b.kind = BusKind::REF;
    else if (type == 2) b.kind = BusKind::PV;
    else b.kind = BusKind::PQ;
    b.pd = r[2];
    b.qd = r[3];
    b.gs = r[4];
    b.bs = r[5];
    b.vm0 = r[7];
    b.va0 = deg2rad(r[8]);
    b.vm_max = r[11];
    b.vm_min = r[12];
    c.buses.push_back(b);
  }
  for (const auto& r : gen) {
    if (r.size() < 10) throw CaseError("gen row too short");
    Generator g;
    g.bus = static_cast<int>(r[0]);
    g.pg0 = r[1];
    g.qg0 = r[2];
    g.qmax = r[3];
    g.qmin = r[4];
    g.status = r[7] > 0;
    g.pmax = r[8];
    g.pmin = r[9];
    c.gens.push_back(g);
  }
  if (gencost.size() != c.gens.size())
    throw CaseError("gencost row count does not match gen count");
  for (size_t i = 0; i < gencost.size(); ++i) {
    const auto& r = gencost[i];
    if (r.size() < 4) throw CaseError("gencost row too short");
    int model = static_cast<int>(r[0]);
    if (model != 2)
      throw CaseError("unsupported gencost model " + std::to_string(model) +
                      " (only polynomial model 2)");
    int n = static_cast<int>(r[3]);
    if (static_cast<int>(r.size()) < 4 + n) throw CaseError("gencost coefficients truncated");
    c.gens[i].cost.assign(r.begin() + 4, r.begin() + 4 + n);
  }
  for (const auto& r : branch) {
    if (r.size() < 11) throw CaseError("branch row too short");
    Branch br;
    br.from = static_cast<int>(r[0]);
    br.to = static_cast<int>(r[1]);
    br.r = r[2];
    br.x = r[3];
    br.b = r[4];
    br.rate_a = r[5];
    br.tap = r[8];
    br.shift = deg2rad(r[9]);
    br.status = r[10] > 0;
    c.branches.push_back(br);
  }
  c.validate();
  return c;
}

struct YbusSet {
  SparseC ybus;  // n_bus x n_bus
  SparseC yf;    // n_branch x n_bus
  SparseC yt;    // n_branch x n_bus
};

inline YbusSet build_ybus(const GridCase& c) {
  const int nb = static_cast<int>(c.buses.size());
  const int nl = static_cast<int>(c.branches.size());
  std::vector<Eigen::Triplet<Complex>> tb, tf, tt;
  for (int l = 0; l < nl; ++l) {
    const Branch& br = c.branches[l];
    if (!br.status) continue;
    const int f = c.bus_index(br.from);
    const int t = c.bus_index(br.to);
    const Complex ys = 1.0 / Complex(br.r, br.x);
    const Complex bc(0, br.b / 2.0);
    const double tau = br.tap == 0 ? 1.0 : br.tap;
    const Complex shift = std::polar(1.0, br.shift);
    const Complex ytt = ys + bc;
    const Complex yff = ytt / (tau * tau);
    const Complex yft = -ys / (tau * std::conj(shift));
    const Complex ytf = -ys / (tau * shift);
    tf.emplace_back(l, f, yff);
    tf.emplace_back(l, t, yft);
    tt.emplace_back(l, f, ytf);
    tt.emplace_back(l, t, ytt);
    tb.emplace_back(f, f, yff);
    tb.emplace_back(f, t, yft);
    tb.emplace_back(t, f, ytf);
    tb.emplace_back(t, t, ytt);
  }
  for (int i = 0; i < nb; ++i) {
    const Bus& b = c.buses[i];
    if (b.gs != 0 || b.bs != 0)
      tb.emplace_back(i, i, Complex(b.gs, b.bs) / c.base_mva);
  }
  YbusSet y;
  y.ybus.resize(nb, nb);
  y.ybus.setFromTriplets(tb.begin(), tb.end());
  y.yf.resize(nl, nb);
  y.yf.setFromTriplets(tf.begin(), tf.end());
  y.yt.resize(nl, nb);
  y.yt.setFromTriplets(tt.begin(), tt.end());
  return y;
}

// Generator connection matrix, n_bus x n_gen over the full generator list;
// out-of-service generators get all-zero columns.
inline SparseD build_cg(const GridCase& c) {
  std::vector<Eigen::Triplet<double>> t;
  for (size_t g = 0; g < c.gens.size(); ++g)
    if (c.gens[g].status)
      t.emplace_back(c.bus_index(c.gens[g].bus), static_cast<int>(g), 1.0);
  SparseD cg(static_cast<int>(c.buses.size()), static_cast<int>(c.gens.size()));
  cg.setFromTriplets(t.begin(), t.end());
  return cg;
}

inline Dimensions dimensions(const GridCase& c) {
  Dimensions d;
  d.n_bus = static_cast<int>(c.buses.size());
  d.n_gen = static_cast<int>(c.active_gens().size());
  d.n_branch = static_cast<int>(c.branches.size());
  d.n_x = 2 * d.n_bus + 2 * d.n_gen;
  d.n_eq = 2 * d.n_bus + 1;
  // Two flow rows per in-service rated branch; one row per finite,
  // non-degenerate variable bound (x_min == x_max rows are equalities).
  int ni = 0;
  for (const Branch& br : c.branches)
    if (br.status && br.rate_a > 0) ni += 2;
  auto count_bound = [&ni](double lo, double hi) {
    if (lo >= hi) return;  // pinned variables become equalities
    if (std::isfinite(hi)) ++ni;
    if (std::isfinite(lo)) ++ni;
  };
  // va is unbounded except the pinned reference angle.
  for (const Bus& b : c.buses) count_bound(b.vm_min, b.vm_max);
  for (int g : c.active_gens()) count_bound(c.gens[g].pmin, c.gens[g].pmax);
  for (int g : c.active_gens()) count_bound(c.gens[g].qmin, c.gens[g].qmax);
  d.n_ineq = ni;
  return d;
}

}  // namespace smartpg
