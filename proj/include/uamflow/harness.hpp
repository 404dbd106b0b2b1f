#pragma once

// Parameter sweeps, Pareto filtering, efficiency-fairness curves, design
// comparisons and their CSV / GeoJSON exports.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "uamflow/errors.hpp"
#include "uamflow/exposure.hpp"
#include "uamflow/optimizer.hpp"
#include "uamflow/welfare.hpp"

namespace uamflow::harness {

using nlohmann::json;

struct SweepPlan {
  std::vector<double> omega{0.5};
  std::vector<double> delta1{0.1};
  std::vector<double> delta2{0.1};
  std::vector<double> m_u{std::numeric_limits<double>::infinity()};
  std::vector<double> p_u{std::numeric_limits<double>::infinity()};
  int replications = 1;
  std::uint64_t seed = 0;
  /// Replication k > 0 starts CCP from y0 = initial_flow * (1 + jitter * U[0,1)) per link.
  double jitter = 1.0;
  optimizer::CcpOptions ccp;
  std::string scenario;    // path to the base scenario, resolved against the plan file
  std::string output_dir;  // may be overridden on the command line

  std::size_t cells() const {
    return omega.size() * delta1.size() * delta2.size() * m_u.size() * p_u.size() *
           static_cast<std::size_t>(std::max(replications, 0));
  }

  std::vector<std::string> problems() const {
    std::vector<std::string> p;
    auto grid = [&](const std::vector<double>& g, const char* name, auto ok, const char* domain) {
      if (g.empty()) p.push_back(std::string(name) + ": grid is empty");
      for (double v : g)
        if (!ok(v)) {
          p.push_back(std::string(name) + ": value outside " + domain);
          break;
        }
    };
    grid(omega, "omega", [](double v) { return v >= 0.0 && v <= 1.0; }, "[0, 1]");
    grid(delta1, "delta1", [](double v) { return v >= 0.0; }, "[0, inf)");
    grid(delta2, "delta2", [](double v) { return v >= 0.0; }, "[0, inf)");
    grid(m_u, "m_u", [](double v) { return v >= 0.0; }, "[0, inf]");
    grid(p_u, "p_u", [](double v) { return v >= 0.0; }, "[0, inf]");
    if (replications < 1) p.push_back("replications must be at least 1");
    if (!(jitter >= 0.0)) p.push_back("jitter must be nonnegative");
    return p;
  }
};

struct Cell {
  std::size_t index = 0;
  double omega = 0.5, delta1 = 0.1, delta2 = 0.1;
  double m_u = std::numeric_limits<double>::infinity();
  double p_u = std::numeric_limits<double>::infinity();
  int replication = 0;
};

/// Grid cells in row-major order: omega outermost, replication innermost.
inline std::vector<Cell> expand(const SweepPlan& plan) {
  std::vector<Cell> out;
  out.reserve(plan.cells());
  for (double w : plan.omega)
    for (double d1 : plan.delta1)
      for (double d2 : plan.delta2)
        for (double mu : plan.m_u)
          for (double pu : plan.p_u)
            for (int r = 0; r < plan.replications; ++r)
              out.push_back({out.size(), w, d1, d2, mu, pu, r});
  return out;
}

struct DesignPoint {
  Cell cell;
  optimizer::Status status = optimizer::Status::SolverError;
  std::string message;
  double mean_demand_pct = 0.0;
  double mean_noise_db = 0.0;
  double extra_energy_pct = 0.0;
  double gini_demand = 0.0;
  double gini_noise = 0.0;
  double objective = 0.0;
  int iterations = 0;
  std::vector<double> layer_share;

  bool ok() const {
    return status == optimizer::Status::Converged || status == optimizer::Status::IterationCap;
  }
};

inline optimizer::ProblemSpec apply(const optimizer::ProblemSpec& base, const Cell& c) {
  optimizer::ProblemSpec s = base;
  s.omega = c.omega;
  s.delta1 = c.delta1;
  s.delta2 = c.delta2;
  s.m_u = c.m_u;
  s.p_u = c.p_u;
  return s;
}

inline DesignPoint summarize(const Cell& c, const optimizer::Solution& sol) {
  DesignPoint p;
  p.cell = c;
  p.status = sol.status;
  p.message = sol.message;
  p.iterations = sol.iterations;
  if (!p.ok()) return p;
  const auto& ev = sol.eval;
  p.mean_demand_pct = 100.0 * ev.mean_d;
  p.mean_noise_db = ev.mean_noise_increase;
  p.extra_energy_pct = 100.0 * ev.p_a;
  p.gini_demand = ev.gini_d;
  p.gini_noise = ev.gini_noise;
  p.objective = ev.objective;
  p.layer_share = ev.layer_share;
  return p;
}

inline optimizer::CcpOptions cell_options(const SweepPlan& plan, const Cell& c, Eigen::Index n_links) {
  optimizer::CcpOptions opts = plan.ccp;
  if (c.replication > 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(plan.seed), static_cast<std::uint32_t>(plan.seed >> 32),
                      static_cast<std::uint32_t>(c.index)};
    std::mt19937_64 rng(seq);
    Eigen::VectorXd y0(n_links);
    for (Eigen::Index i = 0; i < n_links; ++i)
      y0[i] = opts.initial_flow * (1.0 + plan.jitter * static_cast<double>(rng() >> 11) * 0x1.0p-53);
    opts.y0 = y0;
  }
  return opts;
}

inline DesignPoint run_cell(const optimizer::ProblemSpec& base, const SweepPlan& plan, const Cell& c) {
  try {
    const auto spec = apply(base, c);
    return summarize(c, optimizer::ccp_solve(spec, cell_options(plan, c, base.n_links())));
  } catch (const std::exception& e) {
    DesignPoint p;
    p.cell = c;
    p.status = optimizer::Status::SolverError;
    p.message = e.what();
    return p;
  }
}

/// One DesignPoint per cell, in grid order regardless of worker count.
inline std::vector<DesignPoint> run_sweep(const optimizer::ProblemSpec& base, const SweepPlan& plan,
                                          int workers = 1) {
  if (auto p = plan.problems(); !p.empty()) throw ValidationError(std::move(p));
  base.validate();
  const auto cells = expand(plan);
  std::vector<DesignPoint> out(cells.size());
  const int n = std::clamp(workers, 1, static_cast<int>(std::max<std::size_t>(cells.size(), 1)));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < cells.size();) out[i] = run_cell(base, plan, cells[i]);
  };
  if (n == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return out;
}

/// Plan file: {"scenario", "output_dir", "grid": {"omega": [...], ...},
/// "replications", "seed", "jitter", "ccp": {"tolerance", "max_iterations",
/// "initial_flow"}}. null in the m_u / p_u grids means unconstrained.
inline SweepPlan plan_from_json(const json& j, const std::filesystem::path& base_dir = {}) {
  std::vector<std::string> bad;
  SweepPlan plan;
  if (!j.is_object()) throw ValidationError({"plan: expected an object"});
  static const std::set<std::string> known{"version", "scenario", "output_dir", "grid", "replications",
                                           "seed",    "jitter",   "ccp"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) bad.push_back("plan." + k + ": unknown key");
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return (path.is_relative() && !base_dir.empty() ? base_dir / path : path).string();
  };
  auto grid = [&](const json& g, const char* key, std::vector<double>& dst, bool null_is_inf) {
    if (!g.contains(key)) return;
    const auto& a = g.at(key);
    if (!a.is_array()) {
      bad.push_back(std::string("plan.grid.") + key + ": expected an array");
      return;
    }
    dst.clear();
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].is_number()) dst.push_back(a[i].get<double>());
      else if (a[i].is_null() && null_is_inf) dst.push_back(std::numeric_limits<double>::infinity());
      else bad.push_back(std::string("plan.grid.") + key + "[" + std::to_string(i) + "]: expected a number");
    }
  };
  try {
    if (j.contains("scenario")) plan.scenario = resolve(j.at("scenario").get<std::string>());
    if (j.contains("output_dir")) plan.output_dir = resolve(j.at("output_dir").get<std::string>());
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      if (!g.is_object()) {
        bad.push_back("plan.grid: expected an object");
      } else {
        for (const auto& [k, v] : g.items())
          if (k != "omega" && k != "delta1" && k != "delta2" && k != "m_u" && k != "p_u")
            bad.push_back("plan.grid." + k + ": unknown key");
        grid(g, "omega", plan.omega, false);
        grid(g, "delta1", plan.delta1, false);
        grid(g, "delta2", plan.delta2, false);
        grid(g, "m_u", plan.m_u, true);
        grid(g, "p_u", plan.p_u, true);
      }
    }
    if (j.contains("replications")) plan.replications = j.at("replications").get<int>();
    if (j.contains("seed")) plan.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("jitter")) plan.jitter = j.at("jitter").get<double>();
    if (j.contains("ccp")) {
      const auto& c = j.at("ccp");
      for (const auto& [k, v] : c.items())
        if (k != "tolerance" && k != "max_iterations" && k != "initial_flow")
          bad.push_back("plan.ccp." + k + ": unknown key");
      if (c.contains("tolerance")) plan.ccp.tolerance = c.at("tolerance").get<double>();
      if (c.contains("max_iterations")) plan.ccp.max_iterations = c.at("max_iterations").get<int>();
      if (c.contains("initial_flow")) plan.ccp.initial_flow = c.at("initial_flow").get<double>();
    }
  } catch (const json::exception& e) {
    bad.push_back(std::string("plan: ") + e.what());
  }
  for (auto& p : plan.problems()) bad.push_back("plan.grid: " + p);
  if (!(plan.ccp.tolerance >= 0.0)) bad.push_back("plan.ccp.tolerance: must be nonnegative");
  if (plan.ccp.max_iterations < 1) bad.push_back("plan.ccp.max_iterations: must be at least 1");
  if (!(plan.ccp.initial_flow >= 0.0)) bad.push_back("plan.ccp.initial_flow: must be nonnegative");
  if (!bad.empty()) throw ValidationError(std::move(bad));
  return plan;
}

inline SweepPlan load_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open plan file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError({path + ": " + e.what()});
  }
  return plan_from_json(j, std::filesystem::path(path).parent_path());
}

// ---------------------------------------------------------------------------
// Pareto filtering

enum class Direction { Maximize, Minimize };

struct Directions {
  Direction demand = Direction::Maximize;
  Direction noise = Direction::Minimize;
  Direction energy = Direction::Minimize;
};

namespace detail {
/// Objectives oriented so that larger is better.
inline std::array<double, 3> oriented(const DesignPoint& p, const Directions& d) {
  auto o = [](double v, Direction dir) { return dir == Direction::Maximize ? v : -v; };
  return {o(p.mean_demand_pct, d.demand), o(p.mean_noise_db, d.noise), o(p.extra_energy_pct, d.energy)};
}

template <std::size_t N>
bool dominates(const std::array<double, N>& a, const std::array<double, N>& b) {
  bool strict = false;
  for (std::size_t k = 0; k < N; ++k) {
    if (a[k] < b[k]) return false;
    if (a[k] > b[k]) strict = true;
  }
  return strict;
}
}  // namespace detail

/// Non-dominated subset of the successful points. Points equal on all three
/// objectives keep only the first one in input order.
inline std::vector<DesignPoint> pareto_filter(std::span<const DesignPoint> points, Directions dirs = {}) {
  std::vector<std::size_t> ok;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (points[i].ok()) ok.push_back(i);
  std::vector<std::array<double, 3>> obj;
  for (auto i : ok) obj.push_back(detail::oriented(points[i], dirs));
  std::vector<DesignPoint> out;
  for (std::size_t a = 0; a < ok.size(); ++a) {
    bool keep = true;
    for (std::size_t b = 0; b < ok.size() && keep; ++b) {
      if (a == b) continue;
      if (detail::dominates(obj[b], obj[a])) keep = false;
      else if (b < a && obj[b] == obj[a]) keep = false;
    }
    if (keep) out.push_back(points[ok[a]]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Efficiency-fairness curves

enum class Aspect { Demand, Noise };

struct CurveRow {
  double band = 0.0;     // conditioning value: m_u for Demand, omega for Noise
  double mean = 0.0;     // mean demand fulfillment % or mean noise increase dB
  double gini = 0.0;
  std::size_t point = 0;  // grid index of the source cell
};

struct CurveTable {
  Aspect aspect = Aspect::Demand;
  std::vector<CurveRow> rows;
  std::vector<std::string> warnings;
  std::size_t bands = 0;
};

/// Per band, the (mean, Gini) frontier: higher demand (or lower noise) and
/// lower Gini are better. Rows sorted by band, then mean, then Gini.
inline CurveTable efficiency_fairness_curve(std::span<const DesignPoint> points, Aspect aspect) {
  CurveTable t;
  t.aspect = aspect;
  auto band_of = [&](const DesignPoint& p) { return aspect == Aspect::Demand ? p.cell.m_u : p.cell.omega; };
  std::map<double, std::vector<const DesignPoint*>> bands;
  for (const auto& p : points) bands[band_of(p)];
  for (const auto& p : points)
    if (p.ok()) bands[band_of(p)].push_back(&p);
  for (auto& [band, members] : bands) {
    if (members.empty()) {
      t.warnings.push_back("band " + std::to_string(band) + " has no successful points; omitted");
      continue;
    }
    ++t.bands;
    std::vector<std::array<double, 2>> obj;
    for (const auto* p : members)
      obj.push_back(aspect == Aspect::Demand ? std::array{p->mean_demand_pct, -p->gini_demand}
                                             : std::array{-p->mean_noise_db, -p->gini_noise});
    std::vector<CurveRow> rows;
    for (std::size_t a = 0; a < members.size(); ++a) {
      bool keep = true;
      for (std::size_t b = 0; b < members.size() && keep; ++b) {
        if (a == b) continue;
        if (detail::dominates(obj[b], obj[a]) || (b < a && obj[b] == obj[a])) keep = false;
      }
      if (!keep) continue;
      const auto* p = members[a];
      rows.push_back({band, aspect == Aspect::Demand ? p->mean_demand_pct : p->mean_noise_db,
                      aspect == Aspect::Demand ? p->gini_demand : p->gini_noise, p->cell.index});
    }
    std::sort(rows.begin(), rows.end(), [](const CurveRow& x, const CurveRow& y) {
      if (x.mean != y.mean) return x.mean < y.mean;
      if (x.gini != y.gini) return x.gini < y.gini;
      return x.point < y.point;
    });
    t.rows.insert(t.rows.end(), rows.begin(), rows.end());
  }
  return t;
}

// ---------------------------------------------------------------------------
// Design comparison

enum class Criterion { Utilitarian, Egalitarian };

inline std::string to_string(Criterion c) { return c == Criterion::Utilitarian ? "utilitarian" : "egalitarian"; }

/// Utilities lie in [0, 1], so Delta = 1 exceeds any spread (SWF = mean).
inline constexpr double kUtilitarianDelta = 1.0;

struct BoxStats {
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

/// Five-number summary with linearly interpolated quartiles.
inline BoxStats box_stats(std::span<const double> v) {
  if (v.empty()) throw UsageError("box_stats: empty sample");
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  auto q = [&](double p) {
    const double h = p * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
  };
  return {s.front(), q(0.25), q(0.5), q(0.75), s.back()};
}

inline constexpr std::array<const char*, 5> kRadarAxes{
    "demand_mean", "demand_fairness", "noise_mitigation_mean", "noise_mitigation_fairness", "energy_saving"};

struct ComparisonRow {
  std::size_t design = 0;  // position in the selection
  Cell cell;
  Criterion criterion = Criterion::Utilitarian;
  optimizer::Status status = optimizer::Status::SolverError;
  bool failed = true;
  std::string message;
  BoxStats demand;  // d
  BoxStats noise;   // n' / Delta_n,max
  std::array<double, 5> radar{};             // raw axis values
  std::array<double, 5> radar_normalized{};  // best row per axis = 1
  double gini_demand = 0.0, gini_noise = 0.0;
};

struct Comparison {
  std::vector<ComparisonRow> rows;
};

inline Comparison compare_designs(const optimizer::ProblemSpec& base, std::span<const DesignPoint> selected,
                                  std::span<const Criterion> criteria,
                                  const optimizer::CcpOptions& opts = {}) {
  Comparison out;
  for (std::size_t i = 0; i < selected.size(); ++i)
    for (Criterion c : criteria) {
      ComparisonRow row;
      row.design = i;
      row.cell = selected[i].cell;
      row.criterion = c;
      try {
        auto spec = apply(base, selected[i].cell);
        spec.delta1 = spec.delta2 = c == Criterion::Utilitarian ? kUtilitarianDelta : 0.0;
        const auto sol = optimizer::ccp_solve(spec, opts);
        row.status = sol.status;
        row.message = sol.message;
        row.failed = !(sol.status == optimizer::Status::Converged || sol.status == optimizer::Status::IterationCap);
        if (!row.failed) {
          const auto& ev = sol.eval;
          const Eigen::VectorXd nn = ev.n_prime / spec.delta_n_max;
          row.demand = box_stats({ev.d.data(), static_cast<std::size_t>(ev.d.size())});
          row.noise = box_stats({nn.data(), static_cast<std::size_t>(nn.size())});
          row.gini_demand = ev.gini_d;
          row.gini_noise = ev.gini_noise;
          row.radar = {ev.mean_d, 1.0 - ev.gini_d, 1.0 - nn.mean(), 1.0 - ev.gini_noise, 1.0 - ev.p_a};
        }
      } catch (const std::exception& e) {
        row.failed = true;
        row.message = e.what();
      }
      out.rows.push_back(row);
    }
  for (std::size_t k = 0; k < kRadarAxes.size(); ++k) {
    double best = 0.0;
    for (const auto& r : out.rows)
      if (!r.failed) best = std::max(best, r.radar[k]);
    for (auto& r : out.rows)
      r.radar_normalized[k] = !r.failed && best > 0.0 ? r.radar[k] / best : 0.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exports

/// Shortest round-trip decimal form, so outputs are byte-stable.
inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline void write_points_csv(std::ostream& os, std::span<const DesignPoint> points) {
  os << "index,omega,delta1,delta2,m_u,p_u,replication,status,iterations,mean_demand_pct,"
        "mean_noise_db,extra_energy_pct,gini_demand,gini_noise,objective,layer_share\n";
  for (const auto& p : points) {
    std::string shares;
    for (std::size_t k = 0; k < p.layer_share.size(); ++k) shares += (k ? ";" : "") + num(p.layer_share[k]);
    os << p.cell.index << ',' << num(p.cell.omega) << ',' << num(p.cell.delta1) << ',' << num(p.cell.delta2)
       << ',' << num(p.cell.m_u) << ',' << num(p.cell.p_u) << ',' << p.cell.replication << ','
       << optimizer::to_string(p.status) << ',' << p.iterations << ',' << num(p.mean_demand_pct) << ','
       << num(p.mean_noise_db) << ',' << num(p.extra_energy_pct) << ',' << num(p.gini_demand) << ','
       << num(p.gini_noise) << ',' << num(p.objective) << ',' << shares << '\n';
  }
}

/// Inverse of write_points_csv. Throws ValidationError naming the bad lines.
inline std::vector<DesignPoint> read_points_csv(std::istream& is) {
  std::vector<std::string> bad;
  std::vector<DesignPoint> out;
  std::string line;
  if (!std::getline(is, line)) throw ValidationError({"points csv: empty input"});
  auto split = [](const std::string& s, char sep) {
    std::vector<std::string> f;
    std::stringstream ss(s);
    for (std::string x; std::getline(ss, x, sep);) f.push_back(x);
    if (!s.empty() && s.back() == sep) f.emplace_back();
    return f;
  };
  const auto header = split(line, ',');
  if (header.size() != 16 || header[0] != "index" || header[15] != "layer_share")
    throw ValidationError({"points csv: unexpected header"});
  for (int ln = 2; std::getline(is, line); ++ln) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    const std::string where = "points csv line " + std::to_string(ln);
    if (f.size() != 16) {
      bad.push_back(where + ": expected 16 fields");
      continue;
    }
    try {
      auto dbl = [](const std::string& x) {
        std::size_t used = 0;
        const double v = std::stod(x, &used);
        if (used != x.size()) throw std::invalid_argument(x);
        return v;
      };
      DesignPoint p;
      p.cell.index = std::stoul(f[0]);
      p.cell.omega = dbl(f[1]);
      p.cell.delta1 = dbl(f[2]);
      p.cell.delta2 = dbl(f[3]);
      p.cell.m_u = dbl(f[4]);
      p.cell.p_u = dbl(f[5]);
      p.cell.replication = std::stoi(f[6]);
      p.status = optimizer::status_from_string(f[7]);
      p.iterations = std::stoi(f[8]);
      p.mean_demand_pct = dbl(f[9]);
      p.mean_noise_db = dbl(f[10]);
      p.extra_energy_pct = dbl(f[11]);
      p.gini_demand = dbl(f[12]);
      p.gini_noise = dbl(f[13]);
      p.objective = dbl(f[14]);
      if (!f[15].empty())
        for (const auto& x : split(f[15], ';')) p.layer_share.push_back(dbl(x));
      out.push_back(std::move(p));
    } catch (const std::exception&) {
      bad.push_back(where + ": malformed field");
    }
  }
  if (!bad.empty()) throw ValidationError(std::move(bad));
  return out;
}

inline void write_curve_csv(std::ostream& os, const CurveTable& t) {
  os << (t.aspect == Aspect::Demand ? "m_u,mean_demand_pct,gini_demand,point\n"
                                    : "omega,mean_noise_db,gini_noise,point\n");
  for (const auto& r : t.rows) os << num(r.band) << ',' << num(r.mean) << ',' << num(r.gini) << ',' << r.point << '\n';
}

inline void write_boxplot_csv(std::ostream& os, const Comparison& c) {
  os << "design,point,criterion,status,metric,min,q1,median,q3,max\n";
  for (const auto& r : c.rows)
    for (const auto& [name, b] : {std::pair{"demand", r.demand}, std::pair{"noise", r.noise}}) {
      os << r.design << ',' << r.cell.index << ',' << to_string(r.criterion) << ','
         << optimizer::to_string(r.status) << ',' << name;
      if (r.failed) os << ",,,,,\n";
      else
        os << ',' << num(b.min) << ',' << num(b.q1) << ',' << num(b.median) << ',' << num(b.q3) << ','
           << num(b.max) << '\n';
    }
}

inline void write_radar_csv(std::ostream& os, const Comparison& c) {
  os << "design,point,criterion,status";
  for (const char* a : kRadarAxes) os << ',' << a;
  os << '\n';
  for (const auto& r : c.rows) {
    os << r.design << ',' << r.cell.index << ',' << to_string(r.criterion) << ',' << optimizer::to_string(r.status);
    for (double v : r.radar_normalized) os << ',' << (r.failed ? std::string() : num(v));
    os << '\n';
  }
}

/// Per-community noise as a GeoJSON FeatureCollection (planar ft coordinates).
inline json noise_geojson(std::span<const exposure::Community> communities, const optimizer::Evaluation& ev,
                          const welfare::ReactionScore& reaction) {
  if (communities.size() != ev.n.size()) throw UsageError("noise_geojson: community count mismatch");
  json features = json::array();
  for (std::size_t j = 0; j < communities.size(); ++j) {
    const auto& c = communities[j];
    const double inc = ev.n_prime[static_cast<Eigen::Index>(j)];
    json props = {{"id", c.id},
                  {"n", ev.n[j] ? json(*ev.n[j]) : json(nullptr)},
                  {"n_prime", inc},
                  {"reaction_score", reaction(inc)},
                  {"ambient_dba", c.ambient_dba},
                  {"population", c.population}};
    if (c.cls) props["class"] = exposure::to_string(*c.cls);
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "Point"}, {"coordinates", {c.receiver.x, c.receiver.y}}}},
                        {"properties", props}});
  }
  return {{"type", "FeatureCollection"}, {"features", features}};
}

/// Full solution dump: parameters, status, trace and every exact vector.
inline json solution_json(const optimizer::ProblemSpec& spec, const optimizer::Solution& sol) {
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  auto inf_or = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json j;
  j["parameters"] = {{"omega", spec.omega},         {"delta1", spec.delta1},   {"delta2", spec.delta2},
                     {"delta_n_max", spec.delta_n_max}, {"m_u", inf_or(spec.m_u)}, {"p_u", inf_or(spec.p_u)},
                     {"epsilon", spec.epsilon},     {"period_s", spec.period_s}};
  j["status"] = optimizer::to_string(sol.status);
  if (!sol.message.empty()) j["message"] = sol.message;
  j["iterations"] = sol.iterations;
  j["monotone"] = sol.monotone;
  j["ccp_trace"] = sol.ccp_trace;
  json its = json::array();
  for (const auto& r : sol.iterates)
    its.push_back({{"lp_objective", r.lp_objective},
                   {"true_objective", r.true_objective},
                   {"max_noise_increase", r.max_noise_increase},
                   {"mean_noise_increase", r.mean_noise_increase},
                   {"lp_iterations", r.lp_iterations}});
  j["iterates"] = its;
  const auto& ev = sol.eval;
  if (ev.z.size()) {
    json n = json::array();
    for (const auto& l : ev.n) n.push_back(l ? json(*l) : json(nullptr));
    j["metrics"] = {{"objective", ev.objective},
                    {"mean_demand_fulfillment", ev.mean_d},
                    {"mean_noise_increase_db", ev.mean_noise_increase},
                    {"max_noise_increase_db", ev.max_noise_increase},
                    {"extra_energy", ev.p_a},
                    {"gini_demand", ev.gini_d},
                    {"gini_noise", ev.gini_noise},
                    {"layer_share", ev.layer_share}};
    j["y"] = vec(ev.y);
    j["z"] = vec(ev.z);
    j["d"] = vec(ev.d);
    j["n"] = n;
    j["n_prime"] = vec(ev.n_prime);
  }
  return j;
}

}  // namespace uamflow::harness
