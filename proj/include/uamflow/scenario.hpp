#pragma once

// Scenario files (JSON), validation, instantiation into an optimization
// problem, and seeded synthetic scenario generation.

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <functional>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"

#include "uamflow/acoustics.hpp"
#include "uamflow/energy.hpp"
#include "uamflow/errors.hpp"
#include "uamflow/exposure.hpp"
#include "uamflow/geometry.hpp"
#include "uamflow/network.hpp"
#include "uamflow/optimizer.hpp"
#include "uamflow/welfare.hpp"

namespace uamflow::scenario {

using nlohmann::json;
inline constexpr int kFormatVersion = 1;
inline constexpr double kMetersToFeet = 1.0 / 0.3048;

struct UndirectedLink {
  std::string id;
  std::string a;
  std::string b;
};

struct ExplicitRoute {
  std::string origin;
  std::string destination;
  int layer = 0;
  std::vector<std::string> via;  // vertiport ids from origin to destination
};

struct RoutePolicy {
  bool enumerate = true;
  int k = 3;
  double max_stretch = 1.4;
  std::vector<ExplicitRoute> explicit_routes;
};

struct OdSpec {
  std::string origin;
  std::string destination;
  double demand = 0.0;
};

/// A capacity shared by every element unless overridden by id. Infinite when unset.
struct CapacitySpec {
  double fallback = std::numeric_limits<double>::infinity();
  std::map<std::string, double> by_id;

  double at(const std::string& id) const {
    auto it = by_id.find(id);
    return it == by_id.end() ? fallback : it->second;
  }
};

struct Capacities {
  CapacitySpec vertiport;  // by vertiport id
  CapacitySpec link;       // by undirected link id, both directions, every layer
  CapacitySpec waypoint;   // by vertiport id, every layer
};

struct Defaults {
  double epsilon = 0.0;
  double period_s = 3600.0;
  double delta_n_max = 25.0;
  double omega = 0.5;
  double delta1 = 0.1;
  double delta2 = 0.1;
  double m_u = std::numeric_limits<double>::infinity();
  double p_u = std::numeric_limits<double>::infinity();
};

struct Scenario {
  int version = kFormatVersion;
  std::string name;
  bool synthetic = false;
  energy::VehicleParams vehicle;
  std::vector<acoustics::NpdCurve> npd_table = acoustics::default_npd_table();
  acoustics::Mode npd_mode = acoustics::Mode::LevelFlyover;
  acoustics::DirectivityOptions directivity;
  std::vector<double> layer_altitudes_ft{1000.0, 2000.0, 3000.0};
  double msl_offset_ft = 500.0;
  std::vector<network::Vertiport> vertiports;
  std::vector<UndirectedLink> links;
  RoutePolicy routes;
  std::vector<OdSpec> od_pairs;
  std::vector<exposure::Community> communities;
  Capacities capacities;
  Defaults defaults;
  std::vector<welfare::ReactionScore::Anchor> reaction_anchors =
      welfare::ReactionScore::default_anchors();
};

// ---------------------------------------------------------------------------
// JSON reading with path-qualified, collected errors

namespace detail {

class Reader {
 public:
  std::vector<std::string> errors;

  void error(const std::string& path, const std::string& msg) {
    errors.push_back((path.empty() ? "/" : path) + ": " + msg);
  }

  const json* field(const json& obj, const std::string& key, const std::string& path,
                    bool required) {
    if (!obj.is_object()) return nullptr;
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
      if (required) error(path + "/" + key, "missing required field");
      return nullptr;
    }
    return &*it;
  }

  std::optional<double> number(const json& obj, const std::string& key, const std::string& path,
                               bool required) {
    const json* v = field(obj, key, path, required);
    if (!v) return std::nullopt;
    if (!v->is_number()) {
      error(path + "/" + key, "expected a number");
      return std::nullopt;
    }
    const double d = v->get<double>();
    if (!std::isfinite(d)) {
      error(path + "/" + key, "must be finite");
      return std::nullopt;
    }
    return d;
  }

  /// Number or null (null and absent mean +infinity).
  double number_or_inf(const json& obj, const std::string& key, const std::string& path,
                       double fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    if (obj.at(key).is_null()) return std::numeric_limits<double>::infinity();
    return number(obj, key, path, false).value_or(fallback);
  }

  std::optional<std::string> string(const json& obj, const std::string& key,
                                    const std::string& path, bool required) {
    const json* v = field(obj, key, path, required);
    if (!v) return std::nullopt;
    if (!v->is_string()) {
      error(path + "/" + key, "expected a string");
      return std::nullopt;
    }
    return v->get<std::string>();
  }

  const json* array(const json& obj, const std::string& key, const std::string& path,
                    bool required) {
    const json* v = field(obj, key, path, required);
    if (v && !v->is_array()) {
      error(path + "/" + key, "expected an array");
      return nullptr;
    }
    return v;
  }
};

inline std::string idx(const std::string& path, std::size_t i) {
  return path + "/" + std::to_string(i);
}

struct VehicleField {
  const char* name;
  double energy::VehicleParams::*member;
};

inline const std::array<VehicleField, 13>& vehicle_fields() {
  static const std::array<VehicleField, 13> f{{
      {"mass_kg", &energy::VehicleParams::mass_kg},
      {"disk_loading", &energy::VehicleParams::disk_loading},
      {"hover_efficiency", &energy::VehicleParams::hover_efficiency},
      {"climb_efficiency", &energy::VehicleParams::climb_efficiency},
      {"cruise_efficiency", &energy::VehicleParams::cruise_efficiency},
      {"zero_lift_drag", &energy::VehicleParams::zero_lift_drag},
      {"reference_area_m2", &energy::VehicleParams::reference_area_m2},
      {"max_lift_to_drag", &energy::VehicleParams::max_lift_to_drag},
      {"flight_path_angle_deg", &energy::VehicleParams::flight_path_angle_deg},
      {"rate_of_climb_ft_min", &energy::VehicleParams::rate_of_climb_ft_min},
      {"cruise_speed_ft_s", &energy::VehicleParams::cruise_speed_ft_s},
      {"hover_time_per_end_s", &energy::VehicleParams::hover_time_per_end_s},
      {"descent_power_fraction", &energy::VehicleParams::descent_power_fraction},
  }};
  return f;
}

inline void read_capacity(Reader& rd, const json& root, const std::string& key,
                          const std::string& path, CapacitySpec& out) {
  if (!root.is_object() || !root.contains(key)) return;
  const json& v = root.at(key);
  const std::string p = path + "/" + key;
  if (v.is_null()) return;
  if (v.is_number()) {
    out.fallback = v.get<double>();
    if (!(out.fallback >= 0.0)) rd.error(p, "capacity must be nonnegative");
    return;
  }
  if (!v.is_object()) {
    rd.error(p, "expected a number, null or an object of per-id capacities");
    return;
  }
  for (auto it = v.begin(); it != v.end(); ++it) {
    const std::string q = p + "/" + it.key();
    if (it->is_null()) {
      if (it.key() == "default") out.fallback = std::numeric_limits<double>::infinity();
      else out.by_id[it.key()] = std::numeric_limits<double>::infinity();
      continue;
    }
    if (!it->is_number() || !(it->get<double>() >= 0.0)) {
      rd.error(q, "capacity must be a nonnegative number or null");
      continue;
    }
    if (it.key() == "default") out.fallback = it->get<double>();
    else out.by_id[it.key()] = it->get<double>();
  }
}

inline void read_communities(Reader& rd, const json& node, const std::string& path,
                             double unit, std::vector<exposure::Community>& out) {
  const bool geo = node.is_object() && node.value("type", "") == "FeatureCollection";
  const json* items = nullptr;
  std::string base = path;
  if (geo) {
    items = rd.array(node, "features", path, true);
    base = path + "/features";
  } else if (node.is_array()) {
    items = &node;
  } else {
    rd.error(path, "expected an array or a GeoJSON FeatureCollection");
  }
  if (!items) return;
  for (std::size_t i = 0; i < items->size(); ++i) {
    const json& it = (*items)[i];
    std::string p = idx(base, i);
    exposure::Community c;
    const json* props = &it;
    if (geo) {
      const json* g = rd.field(it, "geometry", p, true);
      if (g) {
        const json* coords = rd.array(*g, "coordinates", p + "/geometry", true);
        if (g->value("type", "") != "Point") rd.error(p + "/geometry/type", "expected Point");
        if (coords && coords->size() >= 2 && (*coords)[0].is_number() && (*coords)[1].is_number())
          c.receiver = {(*coords)[0].get<double>() * unit, (*coords)[1].get<double>() * unit};
        else if (coords)
          rd.error(p + "/geometry/coordinates", "expected [x, y]");
      }
      props = rd.field(it, "properties", p, true);
      p += "/properties";
      if (!props) continue;
    } else {
      c.receiver = {rd.number(it, "x", p, true).value_or(0.0) * unit,
                    rd.number(it, "y", p, true).value_or(0.0) * unit};
    }
    c.id = rd.string(*props, "id", p, true).value_or("");
    if (auto cls = rd.string(*props, "class", p, false)) {
      try {
        c.cls = exposure::parse_community_class(*cls);
        c.ambient_dba = exposure::class_ambient_dba(*c.cls);
      } catch (const UsageError& e) {
        rd.error(p + "/class", e.what());
      }
    }
    if (auto amb = rd.number(*props, "ambient_dba", p, !c.cls)) c.ambient_dba = *amb;
    c.population = rd.number(*props, "population", p, false).value_or(0.0);
    if (c.population < 0.0) rd.error(p + "/population", "must be nonnegative");
    out.push_back(std::move(c));
  }
}

}  // namespace detail

/// Every invariant violation of an in-memory scenario. Empty means valid.
inline std::vector<std::string> problems(const Scenario& s) {
  std::vector<std::string> out;
  if (s.version != kFormatVersion)
    out.push_back("/version: unsupported version " + std::to_string(s.version));
  try {
    s.vehicle.validate();
  } catch (const ValidationError& e) {
    for (const auto& p : e.problems()) out.push_back("/vehicle: " + p);
  }
  try {
    acoustics::curve_pair(s.npd_table, s.npd_mode);
  } catch (const UsageError& e) {
    out.push_back(std::string("/npd: ") + e.what());
  }
  if (s.layer_altitudes_ft.empty()) out.push_back("/layers/altitudes_agl_ft: at least one layer is required");
  for (std::size_t k = 0; k < s.layer_altitudes_ft.size(); ++k) {
    if (!(s.layer_altitudes_ft[k] > energy::kHoverTopFt))
      out.push_back("/layers/altitudes_agl_ft/" + std::to_string(k) + ": must exceed " +
                    std::to_string(static_cast<int>(energy::kHoverTopFt)) + " ft");
    if (k > 0 && !(s.layer_altitudes_ft[k] > s.layer_altitudes_ft[k - 1]))
      out.push_back("/layers/altitudes_agl_ft/" + std::to_string(k) + ": layers must be strictly increasing");
  }
  std::map<std::string, std::size_t> vid;
  if (s.vertiports.size() < 2) out.push_back("/vertiports: at least two vertiports are required");
  for (std::size_t i = 0; i < s.vertiports.size(); ++i) {
    const auto& v = s.vertiports[i];
    if (v.id.empty()) out.push_back("/vertiports/" + std::to_string(i) + "/id: empty id");
    else if (!vid.emplace(v.id, i).second)
      out.push_back("/vertiports/" + std::to_string(i) + "/id: duplicate id '" + v.id + "'");
  }
  for (std::size_t i = 0; i < s.vertiports.size(); ++i)
    for (std::size_t j = i + 1; j < s.vertiports.size(); ++j)
      if (s.vertiports[i].position == s.vertiports[j].position)
        out.push_back("/vertiports/" + std::to_string(j) + ": same position as '" + s.vertiports[i].id + "'");
  std::set<std::string> lid;
  std::set<std::pair<std::string, std::string>> endpoints;
  for (std::size_t i = 0; i < s.links.size(); ++i) {
    const auto& l = s.links[i];
    const std::string p = "/links/" + std::to_string(i);
    if (l.id.empty()) out.push_back(p + "/id: empty id");
    else if (!lid.insert(l.id).second) out.push_back(p + "/id: duplicate id '" + l.id + "'");
    if (!vid.count(l.a)) out.push_back(p + "/a: unknown vertiport '" + l.a + "'");
    if (!vid.count(l.b)) out.push_back(p + "/b: unknown vertiport '" + l.b + "'");
    if (l.a == l.b) out.push_back(p + ": link joins a vertiport to itself");
    if (!endpoints.insert(std::minmax(l.a, l.b)).second)
      out.push_back(p + ": duplicate link between '" + l.a + "' and '" + l.b + "'");
  }
  if (s.links.empty()) out.push_back("/links: at least one link is required");
  for (std::size_t i = 0; i < s.links.size(); ++i)
    for (std::size_t j = i + 1; j < s.links.size(); ++j) {
      const auto &li = s.links[i], &lj = s.links[j];
      if (!vid.count(li.a) || !vid.count(li.b) || !vid.count(lj.a) || !vid.count(lj.b)) continue;
      if (geometry::segments_cross(s.vertiports[vid[li.a]].position, s.vertiports[vid[li.b]].position,
                                   s.vertiports[vid[lj.a]].position, s.vertiports[vid[lj.b]].position))
        out.push_back("/links/" + std::to_string(j) + ": crosses link '" + li.id + "'");
    }
  if (s.routes.enumerate) {
    if (s.routes.k < 1) out.push_back("/routes/enumerate/k: must be at least 1");
    if (!(s.routes.max_stretch >= 1.0)) out.push_back("/routes/enumerate/max_stretch: must be >= 1");
  }
  std::set<std::pair<std::string, std::string>> od_seen;
  if (s.od_pairs.empty()) out.push_back("/od_pairs: at least one O-D pair is required");
  for (std::size_t i = 0; i < s.od_pairs.size(); ++i) {
    const auto& od = s.od_pairs[i];
    const std::string p = "/od_pairs/" + std::to_string(i);
    if (!vid.count(od.origin)) out.push_back(p + "/origin: unknown vertiport '" + od.origin + "'");
    if (!vid.count(od.destination))
      out.push_back(p + "/destination: unknown vertiport '" + od.destination + "'");
    if (od.origin == od.destination) out.push_back(p + ": origin equals destination");
    if (!(od.demand > 0.0)) out.push_back(p + "/demand: must be positive");
    if (!od_seen.insert({od.origin, od.destination}).second)
      out.push_back(p + ": duplicate O-D pair " + od.origin + "->" + od.destination);
  }
  for (std::size_t i = 0; i < s.routes.explicit_routes.size(); ++i) {
    const auto& r = s.routes.explicit_routes[i];
    const std::string p = "/routes/explicit/" + std::to_string(i);
    if (!od_seen.count({r.origin, r.destination}))
      out.push_back(p + ": no O-D pair " + r.origin + "->" + r.destination);
    if (r.layer < 0 || r.layer >= static_cast<int>(s.layer_altitudes_ft.size()))
      out.push_back(p + "/layer: no such layer");
    if (r.via.size() < 2 || r.via.front() != r.origin || r.via.back() != r.destination)
      out.push_back(p + "/via: must run from origin to destination");
    for (std::size_t k = 0; k + 1 < r.via.size(); ++k) {
      if (!vid.count(r.via[k])) out.push_back(p + "/via/" + std::to_string(k) + ": unknown vertiport '" + r.via[k] + "'");
      if (!endpoints.count(std::minmax(r.via[k], r.via[k + 1])))
        out.push_back(p + "/via/" + std::to_string(k) + ": no link between '" + r.via[k] + "' and '" +
                      r.via[k + 1] + "'");
    }
  }
  if (!s.routes.enumerate && s.routes.explicit_routes.empty())
    out.push_back("/routes: explicit route list is empty");
  std::set<std::string> cid;
  if (s.communities.empty()) out.push_back("/communities: at least one community is required");
  for (std::size_t i = 0; i < s.communities.size(); ++i) {
    const auto& c = s.communities[i];
    const std::string p = "/communities/" + std::to_string(i);
    if (c.id.empty()) out.push_back(p + "/id: empty id");
    else if (!cid.insert(c.id).second) out.push_back(p + "/id: duplicate id '" + c.id + "'");
    if (!std::isfinite(c.ambient_dba)) out.push_back(p + "/ambient_dba: must be finite");
  }
  auto check_ids = [&](const CapacitySpec& cap, const std::set<std::string>& known, const std::string& p) {
    for (const auto& [id, v] : cap.by_id)
      if (!known.count(id)) out.push_back(p + "/" + id + ": unknown id");
  };
  std::set<std::string> vids;
  for (const auto& [id, i] : vid) vids.insert(id);
  check_ids(s.capacities.vertiport, vids, "/capacities/vertiport");
  check_ids(s.capacities.link, lid, "/capacities/link");
  check_ids(s.capacities.waypoint, vids, "/capacities/waypoint");
  const auto& d = s.defaults;
  if (!(d.epsilon >= 0.0 && d.epsilon <= 1.0)) out.push_back("/defaults/epsilon: must lie in [0, 1]");
  if (!(d.period_s > 0.0)) out.push_back("/defaults/period_s: must be positive");
  if (!(d.delta_n_max > 0.0)) out.push_back("/defaults/delta_n_max: must be positive");
  if (!(d.omega >= 0.0 && d.omega <= 1.0)) out.push_back("/defaults/omega: must lie in [0, 1]");
  if (!(d.delta1 >= 0.0)) out.push_back("/defaults/delta1: must be nonnegative");
  if (!(d.delta2 >= 0.0)) out.push_back("/defaults/delta2: must be nonnegative");
  if (!(d.m_u >= 0.0)) out.push_back("/defaults/m_u: must be nonnegative");
  if (!(d.p_u >= 0.0)) out.push_back("/defaults/p_u: must be nonnegative");
  try {
    welfare::ReactionScore rs(s.reaction_anchors);
  } catch (const ValidationError& e) {
    for (const auto& p : e.problems()) out.push_back("/reaction_anchors: " + p);
  }
  return out;
}

inline void validate(const Scenario& s) {
  if (auto p = problems(s); !p.empty()) throw ValidationError(std::move(p));
}

/// Parses and validates; `base_dir` resolves a relative NPD table path.
inline Scenario from_json(const json& root, const std::filesystem::path& base_dir = {}) {
  detail::Reader rd;
  Scenario s;
  if (!root.is_object()) throw ValidationError({"/: scenario must be a JSON object"});
  if (auto v = rd.number(root, "version", "", true)) s.version = static_cast<int>(*v);
  s.name = rd.string(root, "name", "", false).value_or("");
  if (root.contains("synthetic") && root["synthetic"].is_boolean()) s.synthetic = root["synthetic"].get<bool>();

  double unit = 1.0;
  if (const json* u = rd.field(root, "units", "", true)) {
    const std::string len = rd.string(*u, "length", "/units", true).value_or("ft");
    if (len == "m") unit = kMetersToFeet;
    else if (len != "ft") rd.error("/units/length", "unsupported length unit '" + len + "' (use ft or m)");
  }

  if (const json* v = rd.field(root, "vehicle", "", false)) {
    if (!v->is_object()) rd.error("/vehicle", "expected an object");
    else
      for (auto it = v->begin(); it != v->end(); ++it) {
        auto f = std::find_if(detail::vehicle_fields().begin(), detail::vehicle_fields().end(),
                              [&](const auto& vf) { return it.key() == vf.name; });
        if (f == detail::vehicle_fields().end()) rd.error("/vehicle/" + it.key(), "unknown vehicle parameter");
        else if (auto x = rd.number(*v, it.key(), "/vehicle", true)) s.vehicle.*(f->member) = *x;
      }
  }

  if (const json* n = rd.field(root, "npd", "", false)) {
    if (auto mode = rd.string(*n, "mode", "/npd", false)) {
      try {
        s.npd_mode = acoustics::parse_mode(*mode);
      } catch (const UsageError& e) {
        rd.error("/npd/mode", e.what());
      }
    }
    if (auto table = rd.string(*n, "table", "/npd", false)) {
      try {
        std::filesystem::path p(*table);
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        s.npd_table = acoustics::load_npd_table(p.string());
      } catch (const UsageError& e) {
        rd.error("/npd/table", e.what());
      }
    } else if (const json* curves = rd.array(*n, "curves", "/npd", false)) {
      s.npd_table.clear();
      for (std::size_t i = 0; i < curves->size(); ++i) {
        const auto p = detail::idx("/npd/curves", i);
        const json& c = (*curves)[i];
        acoustics::NpdCurve curve;
        try {
          curve.mode = acoustics::parse_mode(rd.string(c, "mode", p, true).value_or("L"));
          curve.position = acoustics::parse_position(rd.string(c, "position", p, true).value_or("C"));
        } catch (const UsageError& e) {
          rd.error(p, e.what());
        }
        curve.a0 = rd.number(c, "a0", p, true).value_or(0.0);
        curve.a1 = rd.number(c, "a1", p, true).value_or(0.0);
        curve.a2 = rd.number(c, "a2", p, true).value_or(0.0);
        s.npd_table.push_back(curve);
      }
    }
    if (n->contains("clamp_directivity") && (*n)["clamp_directivity"].is_boolean())
      s.directivity.clamp_weight = (*n)["clamp_directivity"].get<bool>();
  }

  if (const json* l = rd.field(root, "layers", "", true)) {
    if (const json* alts = rd.array(*l, "altitudes_agl_ft", "/layers", true)) {
      s.layer_altitudes_ft.clear();
      for (std::size_t i = 0; i < alts->size(); ++i) {
        if (!(*alts)[i].is_number()) rd.error(detail::idx("/layers/altitudes_agl_ft", i), "expected a number");
        else s.layer_altitudes_ft.push_back((*alts)[i].get<double>() * unit);
      }
    }
    s.msl_offset_ft = rd.number(*l, "msl_offset_ft", "/layers", false).value_or(500.0 / unit) * unit;
  }

  if (const json* vs = rd.array(root, "vertiports", "", true))
    for (std::size_t i = 0; i < vs->size(); ++i) {
      const auto p = detail::idx("/vertiports", i);
      const json& v = (*vs)[i];
      s.vertiports.push_back({rd.string(v, "id", p, true).value_or(""),
                              {rd.number(v, "x", p, true).value_or(0.0) * unit,
                               rd.number(v, "y", p, true).value_or(0.0) * unit}});
    }

  if (const json* ls = rd.array(root, "links", "", true))
    for (std::size_t i = 0; i < ls->size(); ++i) {
      const auto p = detail::idx("/links", i);
      const json& l = (*ls)[i];
      UndirectedLink lk{rd.string(l, "id", p, false).value_or(""), rd.string(l, "a", p, true).value_or(""),
                        rd.string(l, "b", p, true).value_or("")};
      if (lk.id.empty()) lk.id = lk.a + "-" + lk.b;
      s.links.push_back(std::move(lk));
    }

  if (const json* r = rd.field(root, "routes", "", false)) {
    if (const json* en = rd.field(*r, "enumerate", "/routes", false)) {
      s.routes.enumerate = true;
      s.routes.k = static_cast<int>(rd.number(*en, "k", "/routes/enumerate", false).value_or(3));
      s.routes.max_stretch = rd.number(*en, "max_stretch", "/routes/enumerate", false).value_or(1.4);
    }
    if (const json* ex = rd.array(*r, "explicit", "/routes", false)) {
      if (!r->contains("enumerate")) s.routes.enumerate = false;
      for (std::size_t i = 0; i < ex->size(); ++i) {
        const auto p = detail::idx("/routes/explicit", i);
        const json& e = (*ex)[i];
        ExplicitRoute er;
        er.origin = rd.string(e, "origin", p, true).value_or("");
        er.destination = rd.string(e, "destination", p, true).value_or("");
        er.layer = static_cast<int>(rd.number(e, "layer", p, true).value_or(0));
        if (const json* via = rd.array(e, "via", p, true))
          for (std::size_t k = 0; k < via->size(); ++k) {
            if ((*via)[k].is_string()) er.via.push_back((*via)[k].get<std::string>());
            else rd.error(detail::idx(p + "/via", k), "expected a vertiport id");
          }
        s.routes.explicit_routes.push_back(std::move(er));
      }
    }
  }

  if (const json* ods = rd.array(root, "od_pairs", "", true))
    for (std::size_t i = 0; i < ods->size(); ++i) {
      const auto p = detail::idx("/od_pairs", i);
      const json& o = (*ods)[i];
      s.od_pairs.push_back({rd.string(o, "origin", p, true).value_or(""),
                            rd.string(o, "destination", p, true).value_or(""),
                            rd.number(o, "demand", p, true).value_or(0.0)});
    }

  if (const json* cs = rd.field(root, "communities", "", true))
    detail::read_communities(rd, *cs, "/communities", unit, s.communities);

  if (const json* caps = rd.field(root, "capacities", "", false)) {
    detail::read_capacity(rd, *caps, "vertiport", "/capacities", s.capacities.vertiport);
    detail::read_capacity(rd, *caps, "link", "/capacities", s.capacities.link);
    detail::read_capacity(rd, *caps, "waypoint", "/capacities", s.capacities.waypoint);
  }

  if (const json* d = rd.field(root, "defaults", "", false)) {
    auto& df = s.defaults;
    df.epsilon = rd.number(*d, "epsilon", "/defaults", false).value_or(df.epsilon);
    df.period_s = rd.number(*d, "period_s", "/defaults", false).value_or(df.period_s);
    df.delta_n_max = rd.number(*d, "delta_n_max", "/defaults", false).value_or(df.delta_n_max);
    df.omega = rd.number(*d, "omega", "/defaults", false).value_or(df.omega);
    df.delta1 = rd.number(*d, "delta1", "/defaults", false).value_or(df.delta1);
    df.delta2 = rd.number(*d, "delta2", "/defaults", false).value_or(df.delta2);
    df.m_u = rd.number_or_inf(*d, "m_u", "/defaults", df.m_u);
    df.p_u = rd.number_or_inf(*d, "p_u", "/defaults", df.p_u);
  }

  if (const json* ra = rd.array(root, "reaction_anchors", "", false)) {
    s.reaction_anchors.clear();
    for (std::size_t i = 0; i < ra->size(); ++i) {
      const json& a = (*ra)[i];
      if (a.is_array() && a.size() == 2 && a[0].is_number() && a[1].is_number())
        s.reaction_anchors.emplace_back(a[0].get<double>(), a[1].get<double>());
      else
        rd.error(detail::idx("/reaction_anchors", i), "expected [noise_increase_db, score]");
    }
  }

  for (auto& p : problems(s)) rd.errors.push_back(std::move(p));
  if (!rd.errors.empty()) {
    // Schema errors first in document order, then invariant violations; drop repeats.
    std::vector<std::string> uniq;
    std::set<std::string> seen;
    for (auto& e : rd.errors)
      if (seen.insert(e).second) uniq.push_back(std::move(e));
    throw ValidationError(std::move(uniq));
  }
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open scenario '" + path + "'");
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError({"/: " + std::string(e.what())});
  }
  return from_json(root, std::filesystem::path(path).parent_path());
}

inline json to_json(const Scenario& s) {
  auto inf_or = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json j;
  j["version"] = s.version;
  if (!s.name.empty()) j["name"] = s.name;
  j["synthetic"] = s.synthetic;
  j["units"] = {{"length", "ft"}};
  json veh = json::object();
  for (const auto& f : detail::vehicle_fields()) veh[f.name] = s.vehicle.*(f.member);
  j["vehicle"] = veh;
  json curves = json::array();
  for (const auto& c : s.npd_table)
    curves.push_back({{"mode", acoustics::to_string(c.mode)},
                      {"position", acoustics::to_string(c.position)},
                      {"a0", c.a0}, {"a1", c.a1}, {"a2", c.a2}});
  j["npd"] = {{"mode", acoustics::to_string(s.npd_mode)},
              {"clamp_directivity", s.directivity.clamp_weight},
              {"curves", curves}};
  j["layers"] = {{"altitudes_agl_ft", s.layer_altitudes_ft}, {"msl_offset_ft", s.msl_offset_ft}};
  json vs = json::array();
  for (const auto& v : s.vertiports) vs.push_back({{"id", v.id}, {"x", v.position.x}, {"y", v.position.y}});
  j["vertiports"] = vs;
  json ls = json::array();
  for (const auto& l : s.links) ls.push_back({{"id", l.id}, {"a", l.a}, {"b", l.b}});
  j["links"] = ls;
  json routes = json::object();
  if (s.routes.enumerate) routes["enumerate"] = {{"k", s.routes.k}, {"max_stretch", s.routes.max_stretch}};
  if (!s.routes.explicit_routes.empty()) {
    json ex = json::array();
    for (const auto& r : s.routes.explicit_routes)
      ex.push_back({{"origin", r.origin}, {"destination", r.destination}, {"layer", r.layer}, {"via", r.via}});
    routes["explicit"] = ex;
  }
  j["routes"] = routes;
  json ods = json::array();
  for (const auto& o : s.od_pairs)
    ods.push_back({{"origin", o.origin}, {"destination", o.destination}, {"demand", o.demand}});
  j["od_pairs"] = ods;
  json cs = json::array();
  for (const auto& c : s.communities) {
    json cj = {{"id", c.id}, {"x", c.receiver.x}, {"y", c.receiver.y}, {"ambient_dba", c.ambient_dba},
               {"population", c.population}};
    if (c.cls && exposure::class_ambient_dba(*c.cls) == c.ambient_dba) {
      cj["class"] = exposure::to_string(*c.cls);
      cj.erase("ambient_dba");
    }
    cs.push_back(cj);
  }
  j["communities"] = cs;
  auto cap = [&](const CapacitySpec& c) {
    if (c.by_id.empty()) return inf_or(c.fallback);
    json o = {{"default", inf_or(c.fallback)}};
    for (const auto& [id, v] : c.by_id) o[id] = inf_or(v);
    return o;
  };
  j["capacities"] = {{"vertiport", cap(s.capacities.vertiport)},
                     {"link", cap(s.capacities.link)},
                     {"waypoint", cap(s.capacities.waypoint)}};
  const auto& d = s.defaults;
  j["defaults"] = {{"epsilon", d.epsilon},   {"period_s", d.period_s}, {"delta_n_max", d.delta_n_max},
                   {"omega", d.omega},       {"delta1", d.delta1},     {"delta2", d.delta2},
                   {"m_u", inf_or(d.m_u)},   {"p_u", inf_or(d.p_u)}};
  json anchors = json::array();
  for (const auto& [x, y] : s.reaction_anchors) anchors.push_back({x, y});
  j["reaction_anchors"] = anchors;
  return j;
}

inline void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write scenario '" + path + "'");
  out << to_json(s).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Instantiation

struct Instance {
  Scenario scenario;
  optimizer::ProblemSpec spec;
  exposure::NoiseImpactMatrix impact;
  std::vector<exposure::LinkGeometry> link_geometry;
  std::vector<std::string> warnings;
};

/// Layered topology: every undirected link becomes two directed links on
/// every layer. Directed link order is layer, declaration, then a->b before b->a.
inline network::NetworkTopology build_topology(const Scenario& s, std::vector<std::string>* warnings = nullptr) {
  network::NetworkTopology t;
  t.vertiports = s.vertiports;
  t.layer_altitudes_ft = s.layer_altitudes_ft;
  t.nodes = network::layered_nodes(s.vertiports, s.layer_altitudes_ft.size());
  std::map<std::string, int> vid;
  for (std::size_t i = 0; i < s.vertiports.size(); ++i) vid[s.vertiports[i].id] = static_cast<int>(i);
  const int nv = static_cast<int>(s.vertiports.size());
  std::map<std::tuple<int, int, int>, int> directed;  // (layer, tail vertiport, head vertiport) -> link
  for (int k = 0; k < static_cast<int>(s.layer_altitudes_ft.size()); ++k)
    for (const auto& l : s.links) {
      const int a = vid.at(l.a), b = vid.at(l.b);
      for (auto [tail, head] : {std::pair{a, b}, std::pair{b, a}}) {
        directed[{k, tail, head}] = static_cast<int>(t.links.size());
        t.links.push_back({l.id + ":" + s.vertiports[tail].id + ">" + s.vertiports[head].id + "@" + std::to_string(k),
                           k * nv + tail, k * nv + head});
        t.cap_link.push_back(s.capacities.link.at(l.id));
      }
    }
  for (const auto& o : s.od_pairs) t.od_pairs.push_back({vid.at(o.origin), vid.at(o.destination), o.demand});
  for (const auto& v : s.vertiports) t.cap_vertiport.push_back(s.capacities.vertiport.at(v.id));
  for (const auto& n : t.nodes)
    t.cap_waypoint.push_back(s.capacities.waypoint.at(s.vertiports[static_cast<std::size_t>(n.vertiport)].id));

  if (s.routes.enumerate) {
    auto en = network::enumerate_routes(t, s.routes.k, s.routes.max_stretch);
    t.routes = std::move(en.routes);
    if (warnings) warnings->insert(warnings->end(), en.warnings.begin(), en.warnings.end());
  }
  std::map<std::pair<int, int>, int> od_index;
  for (std::size_t o = 0; o < t.od_pairs.size(); ++o)
    od_index[{t.od_pairs[o].origin, t.od_pairs[o].destination}] = static_cast<int>(o);
  for (const auto& r : s.routes.explicit_routes) {
    network::Route route;
    route.layer = r.layer;
    route.od = od_index.at({vid.at(r.origin), vid.at(r.destination)});
    for (std::size_t k = 0; k + 1 < r.via.size(); ++k)
      route.links.push_back(directed.at({r.layer, vid.at(r.via[k]), vid.at(r.via[k + 1])}));
    if (std::find_if(t.routes.begin(), t.routes.end(), [&](const network::Route& x) {
          return x.links == route.links;
        }) == t.routes.end())
      t.routes.push_back(std::move(route));
  }
  std::vector<char> covered(t.od_pairs.size(), 0);
  for (const auto& r : t.routes) covered[static_cast<std::size_t>(r.od)] = 1;
  for (std::size_t o = 0; o < covered.size(); ++o)
    if (!covered[o] && warnings && s.routes.explicit_routes.size() && !s.routes.enumerate)
      warnings->push_back("od pair " + s.od_pairs[o].origin + "->" + s.od_pairs[o].destination +
                          " has no route");
  return t;
}

inline Instance instantiate(const Scenario& s) {
  validate(s);
  Instance inst;
  inst.scenario = s;
  auto& spec = inst.spec;
  spec.topology = build_topology(s, &inst.warnings);
  const auto& t = spec.topology;
  spec.mats = network::build_incidence(t);

  for (std::size_t l = 0; l < t.links.size(); ++l) {
    const auto& lk = t.links[l];
    const auto& tail = t.nodes[static_cast<std::size_t>(lk.tail)];
    const auto& head = t.nodes[static_cast<std::size_t>(lk.head)];
    inst.link_geometry.push_back({lk.id, tail.position, head.position,
                                  s.layer_altitudes_ft[static_cast<std::size_t>(tail.layer)]});
  }
  const auto curves = acoustics::curve_pair(s.npd_table, s.npd_mode);
  inst.impact = exposure::build_impact_matrix(inst.link_geometry, s.communities, curves, {s.directivity});
  spec.M = inst.impact.energy;

  const auto nc = static_cast<Eigen::Index>(s.communities.size());
  spec.ambient.resize(nc);
  for (Eigen::Index j = 0; j < nc; ++j) spec.ambient[j] = s.communities[static_cast<std::size_t>(j)].ambient_dba;
  spec.demand.resize(static_cast<Eigen::Index>(t.od_pairs.size()));
  for (std::size_t o = 0; o < t.od_pairs.size(); ++o) spec.demand[static_cast<Eigen::Index>(o)] = t.od_pairs[o].demand;
  auto to_vec = [](const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())).eval();
  };
  spec.cap_vertiport = to_vec(t.cap_vertiport);
  spec.cap_link = to_vec(t.cap_link);
  spec.cap_waypoint = to_vec(t.cap_waypoint);

  std::vector<energy::RouteLeg> legs;
  for (const auto& r : t.routes)
    legs.push_back({t.route_length_ft(r), s.layer_altitudes_ft[static_cast<std::size_t>(r.layer)]});
  spec.extra_energy = energy::route_extra_energy(legs, s.vehicle, s.layer_altitudes_ft.front(), s.msl_offset_ft);

  const auto& d = s.defaults;
  spec.omega = d.omega;
  spec.delta1 = d.delta1;
  spec.delta2 = d.delta2;
  spec.delta_n_max = d.delta_n_max;
  spec.m_u = d.m_u;
  spec.p_u = d.p_u;
  spec.epsilon = d.epsilon;
  spec.period_s = d.period_s;

  std::vector<char> covered(t.od_pairs.size(), 0);
  for (const auto& r : t.routes) covered[static_cast<std::size_t>(r.od)] = 1;
  if (std::find(covered.begin(), covered.end(), 0) != covered.end())
    inst.warnings.push_back("some O-D pairs have no route; their demand fulfillment is fixed at 0");
  return inst;
}

// ---------------------------------------------------------------------------
// Synthetic scenarios

struct SyntheticOptions {
  std::uint64_t seed = 7;
  int n_vertiports = 19;
  int n_layers = 3;
  int n_communities = 292;
  double width_ft = 80000.0;
  double height_ft = 80000.0;
  /// Probability of each community class, in kAllClasses order.
  std::array<double, 5> ambient_mix{0.45, 0.35, 0.15, 0.05, 0.0};
  int max_links = 45;
  int od_pairs = 62;              // directed; generated as symmetric pairs
  double min_od_distance_ft = 13200.0;
  double demand_min = 2.0;
  double demand_max = 40.0;
  double link_capacity = 30.0;
  double vertiport_capacity = 100.0;
  double waypoint_capacity = 50.0;
  int route_k = 3;
  double max_stretch = 1.4;
  double first_layer_ft = 1000.0;
  double layer_spacing_ft = 1000.0;
};

inline Scenario generate_synthetic(const SyntheticOptions& o) {
  std::vector<std::string> bad;
  if (o.n_vertiports < 2) bad.push_back("n_vertiports must be at least 2");
  if (o.n_layers < 1) bad.push_back("n_layers must be at least 1");
  if (o.n_communities < 1) bad.push_back("n_communities must be at least 1");
  if (!(o.width_ft > 0.0 && o.height_ft > 0.0)) bad.push_back("area must be positive");
  double mix_sum = 0.0;
  for (double p : o.ambient_mix) {
    if (!(p >= 0.0)) bad.push_back("ambient_mix entries must be nonnegative");
    mix_sum += p;
  }
  if (!(std::abs(mix_sum - 1.0) < 1e-6)) bad.push_back("ambient_mix must sum to 1");
  if (o.od_pairs < 2 || o.od_pairs % 2) bad.push_back("od_pairs must be a positive even number");
  if (o.max_links < o.n_vertiports - 1) bad.push_back("max_links must allow a spanning tree");
  if (!(o.demand_min > 0.0 && o.demand_max >= o.demand_min)) bad.push_back("demand range is invalid");
  const long possible = static_cast<long>(o.n_vertiports) * (o.n_vertiports - 1);
  if (o.od_pairs > possible) bad.push_back("more O-D pairs requested than vertiport pairs exist");
  if (!bad.empty()) throw ValidationError(std::move(bad));

  std::mt19937_64 rng(o.seed);
  auto uniform = [&](double lo, double hi) {
    // Explicit mapping keeps the stream identical across standard libraries.
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
  };
  auto below = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };

  Scenario s;
  s.name = "synthetic-" + std::to_string(o.seed);
  s.synthetic = true;
  s.layer_altitudes_ft.clear();
  for (int k = 0; k < o.n_layers; ++k) s.layer_altitudes_ft.push_back(o.first_layer_ft + k * o.layer_spacing_ft);

  // Vertiports with a minimum separation that shrinks if placement stalls.
  const double margin = 0.08;
  double min_sep = 0.6 * std::sqrt(o.width_ft * o.height_ft / o.n_vertiports);
  int stalls = 0;
  while (static_cast<int>(s.vertiports.size()) < o.n_vertiports) {
    geometry::Point2 p{uniform(margin * o.width_ft, (1 - margin) * o.width_ft),
                       uniform(margin * o.height_ft, (1 - margin) * o.height_ft)};
    bool ok = true;
    for (const auto& v : s.vertiports) ok = ok && geometry::distance(v.position, p) >= min_sep;
    if (!ok) {
      if (++stalls > 2000) {
        min_sep *= 0.9;
        stalls = 0;
      }
      continue;
    }
    s.vertiports.push_back({"V" + std::to_string(s.vertiports.size() + 1), p});
  }

  // Links: Euclidean MST first (planar), then the shortest non-crossing pairs.
  const int nv = o.n_vertiports;
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < nv; ++i)
    for (int j = i + 1; j < nv; ++j) pairs.emplace_back(i, j);
  auto len = [&](const std::pair<int, int>& e) {
    return geometry::distance(s.vertiports[e.first].position, s.vertiports[e.second].position);
  };
  std::stable_sort(pairs.begin(), pairs.end(), [&](const auto& a, const auto& b) { return len(a) < len(b); });
  std::vector<int> parent(nv);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> root = [&](int x) { return parent[x] == x ? x : parent[x] = root(parent[x]); };
  std::vector<std::pair<int, int>> chosen;
  auto crosses_any = [&](const std::pair<int, int>& e) {
    for (const auto& c : chosen)
      if (geometry::segments_cross(s.vertiports[e.first].position, s.vertiports[e.second].position,
                                   s.vertiports[c.first].position, s.vertiports[c.second].position))
        return true;
    return false;
  };
  for (const auto& e : pairs)
    if (root(e.first) != root(e.second)) {
      parent[root(e.first)] = root(e.second);
      chosen.push_back(e);
    }
  for (const auto& e : pairs) {
    if (static_cast<int>(chosen.size()) >= o.max_links) break;
    if (std::find(chosen.begin(), chosen.end(), e) != chosen.end()) continue;
    if (!crosses_any(e)) chosen.push_back(e);
  }
  std::sort(chosen.begin(), chosen.end());
  for (const auto& [a, b] : chosen)
    s.links.push_back({s.vertiports[a].id + "-" + s.vertiports[b].id, s.vertiports[a].id, s.vertiports[b].id});

  // O-D pairs: symmetric, far enough apart, and reachable within the stretch bound.
  std::vector<std::vector<double>> dist(nv, std::vector<double>(nv, std::numeric_limits<double>::infinity()));
  for (int i = 0; i < nv; ++i) dist[i][i] = 0.0;
  for (const auto& e : chosen) dist[e.first][e.second] = dist[e.second][e.first] = len(e);
  for (int k = 0; k < nv; ++k)
    for (int i = 0; i < nv; ++i)
      for (int j = 0; j < nv; ++j) dist[i][j] = std::min(dist[i][j], dist[i][k] + dist[k][j]);
  std::vector<std::pair<int, int>> eligible;
  for (int i = 0; i < nv; ++i)
    for (int j = i + 1; j < nv; ++j) {
      const double straight = len({i, j});
      if (straight >= o.min_od_distance_ft && dist[i][j] <= o.max_stretch * straight * (1 - 1e-9))
        eligible.emplace_back(i, j);
    }
  if (static_cast<int>(eligible.size()) < o.od_pairs / 2)
    throw ValidationError({"only " + std::to_string(eligible.size()) +
                           " vertiport pairs are eligible for O-D demand; lower min_od_distance_ft or od_pairs"});
  for (std::size_t i = eligible.size(); i > 1; --i) std::swap(eligible[i - 1], eligible[below(i)]);
  eligible.resize(static_cast<std::size_t>(o.od_pairs / 2));
  std::sort(eligible.begin(), eligible.end());
  for (const auto& [a, b] : eligible) {
    const double demand = std::round(uniform(o.demand_min, o.demand_max));
    s.od_pairs.push_back({s.vertiports[a].id, s.vertiports[b].id, demand});
    s.od_pairs.push_back({s.vertiports[b].id, s.vertiports[a].id, demand});
  }

  // Communities on a jittered grid.
  const int rows = std::max(1, static_cast<int>(std::lround(std::sqrt(o.n_communities * o.height_ft / o.width_ft))));
  const int cols = (o.n_communities + rows - 1) / rows;
  const double dx = o.width_ft / cols, dy = o.height_ft / rows;
  std::array<double, 5> cdf{};
  std::partial_sum(o.ambient_mix.begin(), o.ambient_mix.end(), cdf.begin());
  for (int c = 0; c < o.n_communities; ++c) {
    const int r = c / cols, q = c % cols;
    const geometry::Point2 p{(q + 0.5 + uniform(-0.3, 0.3)) * dx, (r + 0.5 + uniform(-0.3, 0.3)) * dy};
    const double u = uniform(0.0, mix_sum);
    std::size_t k = 0;
    while (k + 1 < cdf.size() && u >= cdf[k]) ++k;
    const double population = std::round(uniform(500.0, 6000.0));
    s.communities.push_back(exposure::make_community("C" + std::to_string(c + 1), p, exposure::kAllClasses[k], population));
  }

  s.routes.enumerate = true;
  s.routes.k = o.route_k;
  s.routes.max_stretch = o.max_stretch;
  s.capacities.link.fallback = o.link_capacity;
  s.capacities.vertiport.fallback = o.vertiport_capacity;
  s.capacities.waypoint.fallback = o.waypoint_capacity;
  validate(s);
  return s;
}

}  // namespace uamflow::scenario
