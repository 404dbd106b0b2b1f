#pragma once

// Toy instances and independent oracles shared by the unit tests and the
// acceptance binary.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "uamflow.hpp"

namespace testsupport {

using namespace uamflow;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Deterministic generator with plain uniform helpers (no distribution objects,
/// so results do not depend on the standard library implementation).
struct Rng {
  std::mt19937_64 eng;
  explicit Rng(std::uint64_t seed) : eng(seed) {}
  double uniform(double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * static_cast<double>(eng() >> 11) * 0x1.0p-53;
  }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(eng() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  bool coin(double p = 0.5) { return uniform() < p; }
};

/// Single-layer topology over vertiports placed at `pts`, with the given
/// directed links (tail, head vertiport indices) and routes (link lists).
struct ToyNetwork {
  std::vector<geometry::Point2> pts;
  std::vector<std::pair<int, int>> links;
  std::vector<std::pair<int, int>> od;       // origin, destination
  std::vector<double> demand;
  std::vector<std::vector<int>> routes;      // link indices
  std::vector<int> route_od;
  std::vector<int> route_layer;              // defaults to 0
  std::vector<double> layer_altitudes{1000.0};
  double link_cap = kInf, vertiport_cap = kInf, waypoint_cap = kInf;
};

inline network::NetworkTopology build_topology(const ToyNetwork& n) {
  network::NetworkTopology t;
  for (std::size_t i = 0; i < n.pts.size(); ++i) t.vertiports.push_back({"V" + std::to_string(i), n.pts[i]});
  t.layer_altitudes_ft = n.layer_altitudes;
  t.nodes = network::layered_nodes(t.vertiports, n.layer_altitudes.size());
  const int nv = static_cast<int>(n.pts.size());
  // link endpoints are node indices: layer k copy of vertiport v is k * nv + v
  for (std::size_t l = 0; l < n.links.size(); ++l)
    t.links.push_back({"L" + std::to_string(l), n.links[l].first, n.links[l].second});
  for (std::size_t o = 0; o < n.od.size(); ++o) t.od_pairs.push_back({n.od[o].first, n.od[o].second, n.demand[o]});
  for (std::size_t r = 0; r < n.routes.size(); ++r)
    t.routes.push_back({n.routes[r], n.route_od[r], n.route_layer.empty() ? 0 : n.route_layer[r]});
  t.cap_vertiport.assign(static_cast<std::size_t>(nv), n.vertiport_cap);
  t.cap_link.assign(n.links.size(), n.link_cap);
  t.cap_waypoint.assign(t.nodes.size(), n.waypoint_cap);
  return t;
}

/// ProblemSpec from a topology, an explicit energy matrix M and ambient levels.
inline optimizer::ProblemSpec make_spec(const network::NetworkTopology& t, const Eigen::MatrixXd& M,
                                        const Eigen::VectorXd& ambient,
                                        std::optional<Eigen::VectorXd> extra = std::nullopt) {
  optimizer::ProblemSpec s;
  s.topology = t;
  s.mats = network::build_incidence(t);
  s.M = M;
  s.ambient = ambient;
  s.demand.resize(static_cast<Eigen::Index>(t.od_pairs.size()));
  for (std::size_t o = 0; o < t.od_pairs.size(); ++o) s.demand[static_cast<Eigen::Index>(o)] = t.od_pairs[o].demand;
  auto vec = [](const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())).eval();
  };
  s.cap_vertiport = vec(t.cap_vertiport);
  s.cap_link = vec(t.cap_link);
  s.cap_waypoint = vec(t.cap_waypoint);
  s.extra_energy = extra ? *extra : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(t.routes.size()));
  return s;
}

/// Energy of one event of `sel_dba` dBA.
inline double energy_of(double sel_dba) { return std::pow(10.0, sel_dba / 10.0); }

/// A <-> B with links A->B (0) and B->A (1) and one route each way.
inline ToyNetwork two_vertiport(double demand_ab, double demand_ba, double link_cap) {
  ToyNetwork n;
  n.pts = {{0.0, 0.0}, {20000.0, 0.0}};
  n.links = {{0, 1}, {1, 0}};
  n.od = {{0, 1}, {1, 0}};
  n.demand = {demand_ab, demand_ba};
  n.routes = {{0}, {1}};
  n.route_od = {0, 1};
  n.link_cap = link_cap;
  return n;
}

/// Directed cycle A->B->C->A with O-D pairs A->B, B->C, C->A (one-link routes)
/// and A->C routed A->B->C.
inline ToyNetwork triangle(const std::array<double, 4>& demand, double link_cap) {
  ToyNetwork n;
  n.pts = {{0.0, 0.0}, {15000.0, 0.0}, {7500.0, 12000.0}};
  n.links = {{0, 1}, {1, 2}, {2, 0}};
  n.od = {{0, 1}, {1, 2}, {2, 0}, {0, 2}};
  n.demand = {demand[0], demand[1], demand[2], demand[3]};
  n.routes = {{0}, {1}, {2}, {0, 1}};
  n.route_od = {0, 1, 2, 3};
  n.link_cap = link_cap;
  return n;
}

/// Triangle instance with random demand, capacities, impact and ambient levels.
inline optimizer::ProblemSpec random_triangle_spec(Rng& rng) {
  std::array<double, 4> demand{};
  for (auto& e : demand) e = rng.uniform(2.0, 12.0);
  auto net = triangle(demand, rng.uniform(4.0, 15.0));
  const auto t = build_topology(net);
  const int nc = rng.integer(2, 4);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(3, nc);
  for (Eigen::Index i = 0; i < M.size(); ++i)
    if (rng.coin(0.8)) M.data()[i] = energy_of(rng.uniform(70.0, 90.0));
  Eigen::VectorXd ambient(nc);
  for (auto& a : ambient) a = rng.uniform(40.0, 60.0);
  auto spec = make_spec(t, M, ambient);
  spec.omega = rng.uniform();
  spec.delta1 = rng.uniform(0.0, 0.5);
  spec.delta2 = rng.uniform(0.0, 0.5);
  return spec;
}

/// Exact-constraint feasibility of a recomputed solution.
inline bool exactly_feasible(const optimizer::ProblemSpec& s, const optimizer::Evaluation& ev, double tol = 1e-6) {
  const auto rep = network::validate_flows(s.mats, ev.y, ev.z, s.epsilon, s.cap_vertiport, s.cap_link,
                                           s.cap_waypoint, tol);
  if (!rep.all_ok()) return false;
  if ((ev.d.array() > 1.0 + tol).any()) return false;
  if (ev.max_noise_increase > s.delta_n_max + tol) return false;
  if (std::isfinite(s.m_u) && ev.mean_noise_increase > s.m_u + tol) return false;
  if (std::isfinite(s.p_u) && ev.p_a > s.p_u + tol) return false;
  return true;
}

// ---------------------------------------------------------------------------
// LP oracle: exhaustive vertex enumeration for tiny, fully boxed problems.

struct DenseLp {
  bool maximize = true;
  std::vector<double> c, lo, hi;            // n
  std::vector<std::vector<double>> a;        // m x n
  std::vector<double> row_lo, row_hi;        // m
};

struct OracleResult {
  bool feasible = false;
  double objective = 0.0;
  std::vector<double> x;
};

/// Every vertex is the solution of n active constraints drawn from the row and
/// bound hyperplanes. Only valid when every variable has finite bounds.
inline OracleResult vertex_oracle(const DenseLp& p, double tol = 1e-7) {
  const int n = static_cast<int>(p.c.size());
  const int m = static_cast<int>(p.a.size());
  struct Plane {
    std::vector<double> coef;
    double rhs;
  };
  std::vector<Plane> planes;
  for (int i = 0; i < m; ++i) {
    if (std::isfinite(p.row_lo[i])) planes.push_back({p.a[i], p.row_lo[i]});
    if (std::isfinite(p.row_hi[i]) && p.row_hi[i] != p.row_lo[i]) planes.push_back({p.a[i], p.row_hi[i]});
  }
  for (int j = 0; j < n; ++j) {
    std::vector<double> e(n, 0.0);
    e[j] = 1.0;
    planes.push_back({e, p.lo[j]});
    if (p.hi[j] != p.lo[j]) planes.push_back({e, p.hi[j]});
  }
  OracleResult best;
  const int np = static_cast<int>(planes.size());
  std::vector<int> pick(n);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == n) {
      Eigen::MatrixXd A(n, n);
      Eigen::VectorXd b(n);
      for (int k = 0; k < n; ++k) {
        for (int j = 0; j < n; ++j) A(k, j) = planes[pick[k]].coef[j];
        b[k] = planes[pick[k]].rhs;
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
      if (lu.rank() < n) return;
      const Eigen::VectorXd x = lu.solve(b);
      for (int j = 0; j < n; ++j)
        if (x[j] < p.lo[j] - tol || x[j] > p.hi[j] + tol) return;
      for (int i = 0; i < m; ++i) {
        double act = 0.0;
        for (int j = 0; j < n; ++j) act += p.a[i][j] * x[j];
        if (act < p.row_lo[i] - tol || act > p.row_hi[i] + tol) return;
      }
      double obj = 0.0;
      for (int j = 0; j < n; ++j) obj += p.c[j] * x[j];
      if (!best.feasible || (p.maximize ? obj > best.objective : obj < best.objective)) {
        best.feasible = true;
        best.objective = obj;
        best.x.assign(x.data(), x.data() + n);
      }
      return;
    }
    for (int k = start; k < np; ++k) {
      pick[depth] = k;
      rec(k + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

inline lp::Model to_model(const DenseLp& p) {
  lp::Model m;
  m.maximize = p.maximize;
  for (std::size_t j = 0; j < p.c.size(); ++j) m.add_variable("x" + std::to_string(j), p.lo[j], p.hi[j], p.c[j]);
  for (std::size_t i = 0; i < p.a.size(); ++i) {
    std::vector<std::pair<int, double>> row;
    for (std::size_t j = 0; j < p.c.size(); ++j) row.emplace_back(static_cast<int>(j), p.a[i][j]);
    m.add_ranged_row("r" + std::to_string(i), row, p.row_lo[i], p.row_hi[i]);
  }
  return m;
}

inline DenseLp random_lp(Rng& rng, int n, int m) {
  DenseLp p;
  p.maximize = rng.coin();
  for (int j = 0; j < n; ++j) {
    p.c.push_back(static_cast<double>(rng.integer(-5, 5)));
    const double lo = static_cast<double>(rng.integer(-3, 1));
    p.lo.push_back(lo);
    p.hi.push_back(lo + static_cast<double>(rng.integer(0, 5)));
  }
  for (int i = 0; i < m; ++i) {
    std::vector<double> row;
    for (int j = 0; j < n; ++j) row.push_back(rng.coin(0.7) ? static_cast<double>(rng.integer(-4, 4)) : 0.0);
    p.a.push_back(row);
    const int kind = rng.integer(0, 3);
    const double r = static_cast<double>(rng.integer(-6, 8));
    if (kind == 0) p.row_lo.push_back(-kInf), p.row_hi.push_back(r);
    else if (kind == 1) p.row_lo.push_back(r), p.row_hi.push_back(kInf);
    else if (kind == 2) p.row_lo.push_back(r), p.row_hi.push_back(r);
    else p.row_lo.push_back(r), p.row_hi.push_back(r + static_cast<double>(rng.integer(0, 4)));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Direct-definition oracles

/// Gini straight from the double sum.
inline double gini_pairs(const std::vector<double>& u) {
  const double n = static_cast<double>(u.size());
  double mean = 0.0;
  for (double x : u) mean += x;
  mean /= n;
  if (mean <= 0.0) return 0.0;
  double s = 0.0;
  for (double a : u)
    for (double b : u) s += std::abs(a - b);
  return s / (2.0 * n * n * mean);
}

/// All simple paths between two nodes by depth-first search, as link lists.
inline std::vector<std::vector<int>> all_simple_paths(const network::NetworkTopology& t, int src, int dst) {
  std::vector<std::vector<int>> out;
  std::vector<int> path;
  std::vector<char> seen(t.nodes.size(), 0);
  std::function<void(int)> dfs = [&](int u) {
    if (u == dst) {
      out.push_back(path);
      return;
    }
    seen[static_cast<std::size_t>(u)] = 1;
    for (std::size_t l = 0; l < t.links.size(); ++l) {
      if (t.links[l].tail != u || seen[static_cast<std::size_t>(t.links[l].head)]) continue;
      path.push_back(static_cast<int>(l));
      dfs(t.links[l].head);
      path.pop_back();
    }
    seen[static_cast<std::size_t>(u)] = 0;
  };
  dfs(src);
  return out;
}

}  // namespace testsupport
