#pragma once

// Multi-layer corridor network: topology, incidence matrices, flow checks and
// k-shortest route enumeration.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "uamflow/errors.hpp"
#include "uamflow/geometry.hpp"

namespace uamflow::network {

using geometry::Point2;

struct Vertiport {
  std::string id;
  Point2 position;
};

/// A vertiport (layer 0) or a corridor waypoint. In a k-layer network every
/// vertiport has one node per layer stacked above it.
struct Node {
  std::string id;
  Point2 position;
  int layer = 0;
  int vertiport = -1;  // vertiport this node sits on or above; -1 for free waypoints
};

struct Link {
  std::string id;
  int tail = -1;
  int head = -1;
};

struct Route {
  std::vector<int> links;
  int od = -1;
  int layer = 0;
};

struct OdPair {
  int origin = -1;       // vertiport index
  int destination = -1;  // vertiport index
  double demand = 0.0;   // flights per hour
};

struct NetworkTopology {
  std::vector<Vertiport> vertiports;
  std::vector<double> layer_altitudes_ft;
  std::vector<Node> nodes;
  std::vector<Link> links;
  std::vector<Route> routes;
  std::vector<OdPair> od_pairs;
  std::vector<double> cap_vertiport;  // n_v
  std::vector<double> cap_link;       // n_l
  std::vector<double> cap_waypoint;   // n_n

  std::size_t layers() const { return layer_altitudes_ft.size(); }

  double link_length_ft(int l) const {
    const auto& lk = links.at(static_cast<std::size_t>(l));
    return geometry::distance(nodes.at(static_cast<std::size_t>(lk.tail)).position,
                              nodes.at(static_cast<std::size_t>(lk.head)).position);
  }

  double route_length_ft(const Route& r) const {
    double len = 0.0;
    for (int l : r.links) len += link_length_ft(l);
    return len;
  }

  double straight_line_ft(const OdPair& od) const {
    return geometry::distance(vertiports.at(static_cast<std::size_t>(od.origin)).position,
                              vertiports.at(static_cast<std::size_t>(od.destination)).position);
  }

  /// Every violated invariant, in a stable order. Empty means valid.
  std::vector<std::string> problems() const;
};

/// Builds the node set of a layered network: node index = layer * n_v + vertiport.
inline std::vector<Node> layered_nodes(const std::vector<Vertiport>& vertiports,
                                       std::size_t layers) {
  std::vector<Node> nodes;
  nodes.reserve(vertiports.size() * layers);
  for (std::size_t k = 0; k < layers; ++k)
    for (std::size_t v = 0; v < vertiports.size(); ++v)
      nodes.push_back({vertiports[v].id + "@" + std::to_string(k), vertiports[v].position,
                       static_cast<int>(k), static_cast<int>(v)});
  return nodes;
}

inline std::vector<std::string> NetworkTopology::problems() const {
  std::vector<std::string> out;
  const int nn = static_cast<int>(nodes.size());
  const int nv = static_cast<int>(vertiports.size());
  const int nl = static_cast<int>(links.size());
  const int no = static_cast<int>(od_pairs.size());
  for (int i = 0; i < nn; ++i) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    if (n.vertiport >= nv) out.push_back("node " + n.id + " references missing vertiport");
    if (n.layer < 0 || n.layer >= static_cast<int>(layers()))
      out.push_back("node " + n.id + " has layer outside [0, " + std::to_string(layers()) + ")");
  }
  for (int l = 0; l < nl; ++l) {
    const auto& lk = links[static_cast<std::size_t>(l)];
    const std::string name = "link " + (lk.id.empty() ? std::to_string(l) : lk.id);
    if (lk.tail < 0 || lk.tail >= nn || lk.head < 0 || lk.head >= nn) {
      out.push_back(name + " references a missing node");
      continue;
    }
    if (lk.tail == lk.head) out.push_back(name + " is a self loop");
    if (nodes[static_cast<std::size_t>(lk.tail)].layer !=
        nodes[static_cast<std::size_t>(lk.head)].layer)
      out.push_back(name + " connects different layers");
  }
  for (int o = 0; o < no; ++o) {
    const auto& od = od_pairs[static_cast<std::size_t>(o)];
    const std::string name = "od pair " + std::to_string(o);
    if (od.origin < 0 || od.origin >= nv || od.destination < 0 || od.destination >= nv)
      out.push_back(name + " references a missing vertiport");
    else if (od.origin == od.destination)
      out.push_back(name + " has identical origin and destination");
    if (!(od.demand >= 0.0)) out.push_back(name + " has negative demand");
  }
  for (std::size_t r = 0; r < routes.size(); ++r) {
    const auto& rt = routes[r];
    const std::string name = "route " + std::to_string(r);
    if (rt.links.empty()) {
      out.push_back(name + " is empty");
      continue;
    }
    if (rt.od < 0 || rt.od >= no) {
      out.push_back(name + " references a missing od pair");
      continue;
    }
    bool links_ok = true;
    for (int l : rt.links)
      if (l < 0 || l >= nl) {
        out.push_back(name + " references missing link " + std::to_string(l));
        links_ok = false;
      }
    if (!links_ok) continue;
    for (std::size_t i = 0; i + 1 < rt.links.size(); ++i) {
      const auto& a = links[static_cast<std::size_t>(rt.links[i])];
      const auto& b = links[static_cast<std::size_t>(rt.links[i + 1])];
      if (a.head != b.tail)
        out.push_back(name + " breaks head-to-tail chain between links " + a.id + " and " + b.id);
    }
    const auto& od = od_pairs[static_cast<std::size_t>(rt.od)];
    const auto& first = links[static_cast<std::size_t>(rt.links.front())];
    const auto& last = links[static_cast<std::size_t>(rt.links.back())];
    if (first.tail >= 0 && first.tail < nn &&
        nodes[static_cast<std::size_t>(first.tail)].vertiport != od.origin)
      out.push_back(name + " does not start at its origin vertiport");
    if (last.head >= 0 && last.head < nn &&
        nodes[static_cast<std::size_t>(last.head)].vertiport != od.destination)
      out.push_back(name + " does not end at its destination vertiport");
    for (int l : rt.links) {
      const auto& lk = links[static_cast<std::size_t>(l)];
      if (lk.tail >= 0 && lk.tail < nn && nodes[static_cast<std::size_t>(lk.tail)].layer != rt.layer) {
        out.push_back(name + " leaves its layer");
        break;
      }
    }
  }
  if (cap_vertiport.size() != vertiports.size())
    out.push_back("vertiport capacity vector has wrong length");
  if (cap_link.size() != links.size()) out.push_back("link capacity vector has wrong length");
  if (cap_waypoint.size() != nodes.size())
    out.push_back("waypoint capacity vector has wrong length");
  for (double c : cap_vertiport)
    if (!(c >= 0.0)) { out.push_back("negative vertiport capacity"); break; }
  for (double c : cap_link)
    if (!(c >= 0.0)) { out.push_back("negative link capacity"); break; }
  for (double c : cap_waypoint)
    if (!(c >= 0.0)) { out.push_back("negative waypoint capacity"); break; }
  return out;
}

struct IncidenceMatrices {
  Eigen::MatrixXd E;  // n_n x n_l node-link, +1 head, -1 tail
  Eigen::MatrixXd F;  // n_l x n_r link-route
  Eigen::MatrixXd H;  // n_o x n_r od-route
  Eigen::MatrixXd J;  // n_v x n_r destination-route
  Eigen::MatrixXd K;  // n_n x n_l inflow indicator, max(E, 0)
};

inline IncidenceMatrices build_incidence(const NetworkTopology& t) {
  if (auto problems = t.problems(); !problems.empty()) throw ValidationError(std::move(problems));
  const auto nn = static_cast<Eigen::Index>(t.nodes.size());
  const auto nl = static_cast<Eigen::Index>(t.links.size());
  const auto nr = static_cast<Eigen::Index>(t.routes.size());
  const auto no = static_cast<Eigen::Index>(t.od_pairs.size());
  const auto nv = static_cast<Eigen::Index>(t.vertiports.size());
  IncidenceMatrices m;
  m.E = Eigen::MatrixXd::Zero(nn, nl);
  m.F = Eigen::MatrixXd::Zero(nl, nr);
  m.H = Eigen::MatrixXd::Zero(no, nr);
  m.J = Eigen::MatrixXd::Zero(nv, nr);
  for (Eigen::Index l = 0; l < nl; ++l) {
    m.E(t.links[static_cast<std::size_t>(l)].head, l) = 1.0;
    m.E(t.links[static_cast<std::size_t>(l)].tail, l) = -1.0;
  }
  for (Eigen::Index r = 0; r < nr; ++r) {
    const auto& rt = t.routes[static_cast<std::size_t>(r)];
    for (int l : rt.links) m.F(l, r) = 1.0;
    m.H(rt.od, r) = 1.0;
    m.J(t.od_pairs[static_cast<std::size_t>(rt.od)].destination, r) = 1.0;
  }
  m.K = m.E.cwiseMax(0.0);
  return m;
}

struct ConstraintCheck {
  bool ok = true;
  double worst = 0.0;  // largest violation magnitude, 0 when satisfied
};

struct FlowReport {
  ConstraintCheck conservation;   // E y = 0
  ConstraintCheck route_link;     // F z = y
  ConstraintCheck vertiport_cap;  // J z <= (1-eps) c_v
  ConstraintCheck link_cap;       // y <= (1-eps) c_l
  ConstraintCheck waypoint_cap;   // K y <= (1-eps) c_w
  ConstraintCheck nonnegative;    // y, z >= 0

  bool all_ok() const {
    return conservation.ok && route_link.ok && vertiport_cap.ok && link_cap.ok &&
           waypoint_cap.ok && nonnegative.ok;
  }
};

namespace detail {
inline ConstraintCheck check_zero(const Eigen::VectorXd& r, double tol) {
  const double w = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
  return {w <= tol, w};
}
inline ConstraintCheck check_le(const Eigen::VectorXd& lhs, const Eigen::VectorXd& rhs,
                                double tol) {
  const double w = lhs.size() ? std::max(0.0, (lhs - rhs).maxCoeff()) : 0.0;
  return {w <= tol, w};
}
}  // namespace detail

inline FlowReport validate_flows(const IncidenceMatrices& m, const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& z, double epsilon,
                                 const Eigen::VectorXd& cap_vertiport,
                                 const Eigen::VectorXd& cap_link,
                                 const Eigen::VectorXd& cap_waypoint, double tol = 1e-9) {
  if (y.size() != m.E.cols() || z.size() != m.F.cols() || cap_vertiport.size() != m.J.rows() ||
      cap_link.size() != m.E.cols() || cap_waypoint.size() != m.E.rows())
    throw UsageError("validate_flows: dimension mismatch");
  const double scale = 1.0 - epsilon;
  FlowReport rep;
  rep.conservation = detail::check_zero(m.E * y, tol);
  rep.route_link = detail::check_zero(m.F * z - y, tol);
  rep.vertiport_cap = detail::check_le(m.J * z, scale * cap_vertiport, tol);
  rep.link_cap = detail::check_le(y, scale * cap_link, tol);
  rep.waypoint_cap = detail::check_le(m.K * y, scale * cap_waypoint, tol);
  const double neg = std::max(y.size() ? std::max(0.0, -y.minCoeff()) : 0.0,
                              z.size() ? std::max(0.0, -z.minCoeff()) : 0.0);
  rep.nonnegative = {neg <= tol, neg};
  return rep;
}

// ---------------------------------------------------------------------------
// Route enumeration (Yen's loopless k-shortest paths, per layer)

struct RouteEnumeration {
  std::vector<Route> routes;
  std::vector<std::string> warnings;
};

namespace detail {

struct Path {
  std::vector<int> links;
  double length = 0.0;
  bool operator<(const Path& o) const {
    if (length != o.length) return length < o.length;
    return links < o.links;
  }
  bool operator==(const Path& o) const { return links == o.links; }
};

/// Dijkstra from `src` to `dst` over links in `allowed`, avoiding blocked
/// nodes and links. Ties on distance resolve to the lower node index.
inline std::optional<Path> shortest_path(const NetworkTopology& t,
                                         const std::vector<std::vector<int>>& out_links, int src,
                                         int dst, const std::vector<char>& blocked_node,
                                         const std::set<int>& blocked_link) {
  const std::size_t nn = t.nodes.size();
  std::vector<double> dist(nn, std::numeric_limits<double>::infinity());
  std::vector<int> via(nn, -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[static_cast<std::size_t>(src)] = 0.0;
  pq.push({0.0, src});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[static_cast<std::size_t>(u)]) continue;
    if (u == dst) break;
    for (int l : out_links[static_cast<std::size_t>(u)]) {
      if (blocked_link.count(l)) continue;
      const int v = t.links[static_cast<std::size_t>(l)].head;
      if (blocked_node[static_cast<std::size_t>(v)]) continue;
      const double nd = d + t.link_length_ft(l);
      if (nd < dist[static_cast<std::size_t>(v)]) {
        dist[static_cast<std::size_t>(v)] = nd;
        via[static_cast<std::size_t>(v)] = l;
        pq.push({nd, v});
      }
    }
  }
  if (!std::isfinite(dist[static_cast<std::size_t>(dst)])) return std::nullopt;
  Path p;
  p.length = dist[static_cast<std::size_t>(dst)];
  for (int v = dst; v != src;) {
    const int l = via[static_cast<std::size_t>(v)];
    p.links.push_back(l);
    v = t.links[static_cast<std::size_t>(l)].tail;
  }
  std::reverse(p.links.begin(), p.links.end());
  return p;
}

inline std::vector<Path> yen(const NetworkTopology& t,
                             const std::vector<std::vector<int>>& out_links, int src, int dst,
                             int k) {
  std::vector<Path> accepted;
  std::set<Path> candidates;
  std::vector<char> no_block(t.nodes.size(), 0);
  auto first = shortest_path(t, out_links, src, dst, no_block, {});
  if (!first) return accepted;
  accepted.push_back(*first);
  while (static_cast<int>(accepted.size()) < k) {
    const Path& prev = accepted.back();
    for (std::size_t i = 0; i < prev.links.size(); ++i) {
      const int spur = i == 0 ? src : t.links[static_cast<std::size_t>(prev.links[i - 1])].head;
      std::vector<int> root(prev.links.begin(), prev.links.begin() + static_cast<long>(i));
      std::set<int> blocked_links;
      for (const auto& p : accepted)
        if (p.links.size() > i && std::equal(root.begin(), root.end(), p.links.begin()))
          blocked_links.insert(p.links[i]);
      std::vector<char> blocked_nodes(t.nodes.size(), 0);
      for (int l : root) blocked_nodes[static_cast<std::size_t>(t.links[static_cast<std::size_t>(l)].tail)] = 1;
      auto spur_path = shortest_path(t, out_links, spur, dst, blocked_nodes, blocked_links);
      if (!spur_path) continue;
      Path total;
      total.links = root;
      total.links.insert(total.links.end(), spur_path->links.begin(), spur_path->links.end());
      for (int l : total.links) total.length += t.link_length_ft(l);
      if (std::find(accepted.begin(), accepted.end(), total) == accepted.end())
        candidates.insert(std::move(total));
    }
    if (candidates.empty()) break;
    accepted.push_back(*candidates.begin());
    candidates.erase(candidates.begin());
  }
  return accepted;
}

}  // namespace detail

/// Up to `k` loop-free shortest routes per O-D pair and layer whose length is
/// within `max_stretch` times the straight-line O-D distance.
inline RouteEnumeration enumerate_routes(const NetworkTopology& t, int k,
                                         double max_stretch = 1.4) {
  if (k < 1) throw UsageError("enumerate_routes: k must be at least 1");
  if (!(max_stretch >= 1.0)) throw UsageError("enumerate_routes: max_stretch must be >= 1");
  std::vector<std::vector<int>> out_links(t.nodes.size());
  for (std::size_t l = 0; l < t.links.size(); ++l)
    out_links[static_cast<std::size_t>(t.links[l].tail)].push_back(static_cast<int>(l));
  // node index of vertiport v on layer k
  std::map<std::pair<int, int>, int> node_at;
  for (std::size_t i = 0; i < t.nodes.size(); ++i)
    if (t.nodes[i].vertiport >= 0) node_at[{t.nodes[i].vertiport, t.nodes[i].layer}] = static_cast<int>(i);

  RouteEnumeration out;
  for (std::size_t o = 0; o < t.od_pairs.size(); ++o) {
    const auto& od = t.od_pairs[o];
    const double limit = max_stretch * t.straight_line_ft(od) * (1.0 + 1e-9);
    std::size_t found_for_pair = 0;
    for (int layer = 0; layer < static_cast<int>(t.layers()); ++layer) {
      auto s = node_at.find({od.origin, layer});
      auto d = node_at.find({od.destination, layer});
      if (s == node_at.end() || d == node_at.end()) continue;
      for (auto& p : detail::yen(t, out_links, s->second, d->second, k)) {
        if (p.length > limit) break;
        out.routes.push_back({std::move(p.links), static_cast<int>(o), layer});
        ++found_for_pair;
      }
    }
    if (found_for_pair == 0)
      out.warnings.push_back("od pair " + t.vertiports[static_cast<std::size_t>(od.origin)].id +
                             "->" + t.vertiports[static_cast<std::size_t>(od.destination)].id +
                             " has no admissible route");
  }
  return out;
}

}  // namespace uamflow::network
