// Acceptance checks. Prints one PASS/FAIL line per criterion; `--only N`
// runs a single criterion. Exit status is nonzero when any selected check fails.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "support.hpp"

using namespace uamflow;
using testsupport::Rng;

namespace {

std::string source(const std::string& rel) { return std::string(UAMFLOW_SOURCE_DIR) + "/" + rel; }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool within_rel(double v, double target, double rel) { return std::abs(v - target) <= rel * std::abs(target); }

// Every CCP run made here, for the conservativeness audit.
struct Audit {
  long iterates = 0;
  long runs = 0;
  double worst_max = -INFINITY;   // max over iterates of n'_max - delta_n_max
  double worst_mean = -INFINITY;  // max over iterates of mean n' - m_u, when active
};
Audit audit;

optimizer::Solution tracked(const optimizer::ProblemSpec& spec, const optimizer::CcpOptions& opts = {}) {
  auto sol = optimizer::ccp_solve(spec, opts);
  ++audit.runs;
  for (const auto& it : sol.iterates) {
    ++audit.iterates;
    audit.worst_max = std::max(audit.worst_max, it.max_noise_increase - spec.delta_n_max);
    if (std::isfinite(spec.m_u)) audit.worst_mean = std::max(audit.worst_mean, it.mean_noise_increase - spec.m_u);
  }
  return sol;
}

// ---------------------------------------------------------------------------

Outcome energy_anchors() {
  const energy::VehicleParams v;
  const double hover = energy::hover_power(v);
  const double e_hover = energy::mission_energy(v, {1000.0, 60000.0}).hover_mj;
  const auto p1 = energy::segment_powers(v, 1000.0), p3 = energy::segment_powers(v, 3000.0);
  bool ok = within_rel(hover, 362.3, 0.001) && within_rel(e_hover, 21.7, 0.005);
  const std::array<std::pair<double, double>, 6> seg{{{p1.climb_kw, 154.1},
                                                      {p1.cruise_kw, 40.8},
                                                      {p1.descent_kw, 16.3},
                                                      {p3.climb_kw, 154.0},
                                                      {p3.cruise_kw, 39.0},
                                                      {p3.descent_kw, 15.6}}};
  std::string bad;
  for (std::size_t k = 0; k < seg.size(); ++k)
    if (!within_rel(seg[k].first, seg[k].second, 0.02)) {
      ok = false;
      bad += fmt(" %.2f!=%.1f", seg[k].first, seg[k].second);
    }
  return {ok, fmt("hover %.4f kW, E_hover %.4f MJ, 1000 ft (%.2f, %.2f, %.2f) kW, 3000 ft (%.2f, %.2f, %.2f) kW",
                  hover, e_hover, p1.climb_kw, p1.cruise_kw, p1.descent_kw, p3.climb_kw, p3.cruise_kw, p3.descent_kw) +
                  (bad.empty() ? "" : ";" + bad)};
}

Outcome extra_energy_ranges() {
  const energy::VehicleParams v;
  std::vector<energy::RouteLeg> legs;
  for (int tenth = 30; tenth <= 300; ++tenth)
    for (double h : {2000.0, 3000.0}) legs.push_back({tenth * 0.1 * 5280.0, h});
  const Eigen::VectorXd p = energy::route_extra_energy(legs, v, 1000.0);
  double lo2 = INFINITY, hi2 = -INFINITY, lo3 = INFINITY, hi3 = -INFINITY;
  for (std::size_t k = 0; k < legs.size(); ++k) {
    const double pct = 100.0 * p[static_cast<Eigen::Index>(k)];
    if (legs[k].cruise_altitude_agl_ft == 2000.0) lo2 = std::min(lo2, pct), hi2 = std::max(hi2, pct);
    else lo3 = std::min(lo3, pct), hi3 = std::max(hi3, pct);
  }
  const bool ok = lo2 >= 7.28 - 1.5 && hi2 <= 18.34 + 1.5 && lo3 >= 14.70 - 1.5 && hi3 <= 36.97 + 1.5;
  return {ok, fmt("3-30 mi: 2000 ft [%.2f%%, %.2f%%] vs [5.78, 19.84]; 3000 ft [%.2f%%, %.2f%%] vs [13.20, 38.47]", lo2,
                  hi2, lo3, hi3)};
}

Outcome noise_oracle() {
  Rng rng(3);
  const auto curves = acoustics::curve_pair(acoustics::default_npd_table(), acoustics::Mode::LevelFlyover);
  double worst = 0.0;
  int silent = 0, mismatched_silence = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int nl = rng.integer(1, 5), nc = rng.integer(1, 5);
    std::vector<exposure::LinkGeometry> links;
    for (int i = 0; i < nl; ++i)
      links.push_back({"L" + std::to_string(i),
                       {rng.uniform(0, 20000), rng.uniform(0, 20000)},
                       {rng.uniform(0, 20000), rng.uniform(0, 20000)},
                       1000.0 * rng.integer(1, 3)});
    std::vector<exposure::Community> comms;
    for (int j = 0; j < nc; ++j)
      comms.push_back({"C" + std::to_string(j), {rng.uniform(0, 20000), rng.uniform(0, 20000)}, rng.uniform(40, 65)});
    const auto impact = exposure::build_impact_matrix(links, comms, curves);
    Eigen::VectorXd y(nl);
    for (auto& f : y) f = rng.integer(0, 20);
    const auto n = exposure::cumulative_noise(impact.energy, y);
    for (int j = 0; j < nc; ++j) {
      std::vector<acoustics::NoiseEvent> events;
      for (int i = 0; i < nl; ++i)
        if (!impact.masked(i, j))
          for (int k = 0; k < static_cast<int>(y[i]); ++k) events.push_back({impact.sel(i, j)});
      const auto agg = acoustics::aggregate(events, acoustics::Metric::leq1h());
      if (agg.has_value() != n[static_cast<std::size_t>(j)].has_value()) {
        ++mismatched_silence;
        continue;
      }
      if (!agg) {
        ++silent;
        continue;
      }
      worst = std::max(worst, std::abs(*agg - *n[static_cast<std::size_t>(j)]));
    }
  }
  return {worst <= 1e-9 && mismatched_silence == 0,
          fmt("max |diff| %.3g dB over 100 cases (%d silent receivers, %d silence mismatches)", worst, silent,
              mismatched_silence)};
}

Outcome npd_fidelity() {
  // coefficients typed in independently of the library's copy
  struct Row {
    acoustics::Mode mode;
    acoustics::Position pos;
    double a0, a1, a2;
  };
  using M = acoustics::Mode;
  using P = acoustics::Position;
  const Row rows[] = {{M::LevelFlyover, P::Centerline, 88.09, 3.21, -2.62}, {M::LevelFlyover, P::Side45, 78.01, 7.26, -3.39},
                      {M::Departure, P::Centerline, 84.05, 8.76, -4.18},    {M::Departure, P::Side45, 77.34, 11.34, -4.72},
                      {M::Approach, P::Centerline, 93.35, 5.17, -2.86},     {M::Approach, P::Side45, 85.55, 6.83, -3.14}};
  const auto table = acoustics::default_npd_table();
  double worst = 0.0;
  bool decreasing = true;
  for (const auto& r : rows) {
    const auto& c = acoustics::find_curve(table, r.mode, r.pos);
    for (double d : {200.0, 1000.0, 10000.0, 20000.0}) {
      const double x = std::log10(d);
      worst = std::max(worst, std::abs(acoustics::npd_level(c, d) - (r.a0 + r.a1 * x + r.a2 * x * x)));
    }
    double prev = INFINITY;
    for (double d = 200.0; d <= 20000.0; d *= 1.01) {
      const double l = acoustics::npd_level(c, d);
      decreasing = decreasing && l < prev;
      prev = l;
    }
  }
  return {worst <= 1e-6 && decreasing,
          fmt("max |diff| %.3g dBA over 24 anchors; strictly decreasing on [200, 20000] ft: %s", worst,
              decreasing ? "yes" : "no")};
}

Outcome swf_gini_properties() {
  Rng rng(5);
  int failures = 0;
  auto vec = [&](int n, double lo, double hi) {
    std::vector<double> u(static_cast<std::size_t>(n));
    for (auto& x : u) x = rng.uniform(lo, hi);
    return u;
  };
  for (int k = 0; k < 1000; ++k) {
    const std::vector<double> c(static_cast<std::size_t>(rng.integer(1, 20)), rng.uniform());
    if (std::abs(welfare::fairness_threshold_swf(c, rng.uniform(0, 2)) - c[0]) > 1e-12) ++failures;
  }
  for (int k = 0; k < 1000; ++k) {
    const auto u = vec(rng.integer(1, 20), 0, 1);
    // any threshold at or above the spread is utilitarian
    if (std::abs(welfare::fairness_threshold_swf(u, 1.0 + rng.uniform(0, 1e6)) - welfare::mean(u)) > 1e-9) ++failures;
  }
  for (int k = 0; k < 1000; ++k) {
    const auto u = vec(rng.integer(1, 20), 0, 1);
    if (std::abs(welfare::fairness_threshold_swf(u, 0.0) - *std::min_element(u.begin(), u.end())) > 1e-12) ++failures;
  }
  for (int k = 0; k < 1000; ++k) {
    const auto u = vec(rng.integer(2, 20), 0, 5);
    const double g = welfare::gini(u), s = rng.uniform(0.01, 100.0), t = rng.uniform(0.01, 10.0);
    auto scaled = u, shifted = u;
    for (auto& x : scaled) x *= s;
    for (auto& x : shifted) x += t;
    if (std::abs(welfare::gini(scaled) - g) > 1e-12) ++failures;
    if (g > 0.0 && !(welfare::gini(shifted) < g)) ++failures;
  }
  return {failures == 0, fmt("%d violations over 4 x 1000 random vectors", failures)};
}

Outcome lp_losslessness() {
  Rng rng(6);
  auto solver = lp::make_solver();
  int checked = 0, skipped = 0;
  double worst = 0.0;
  while (checked < 50) {
    auto spec = testsupport::random_triangle_spec(rng);
    if (rng.coin(0.4)) spec.m_u = rng.uniform(0.5, 8.0);
    spec.delta_n_max = rng.uniform(5.0, 25.0);
    Eigen::VectorXd yh(spec.n_links());
    for (auto& v : yh) v = rng.uniform(0.01, 8.0);
    const auto s = optimizer::solve_approximation(spec, yh, *solver);
    if (s.status != lp::Status::Optimal) {
      ++skipped;
      continue;
    }
    const double direct = optimizer::true_objective(spec, s.d, s.w);
    worst = std::max(worst, std::abs(s.objective + s.objective_constant - direct));
    ++checked;
  }
  return {worst <= 1e-6, fmt("max |LP - direct| %.3g over %d specs (%d infeasible draws skipped)", worst, checked, skipped)};
}

// Triangle toy: conservation pins every link flow to one value t, so z = (t - s, t - s, t, s).
double grid_optimum(const optimizer::ProblemSpec& spec, double step = 0.1) {
  const double cap = spec.cap_link.minCoeff() * (1.0 - spec.epsilon);
  const double t_max = std::min({cap, spec.demand[0] + spec.demand[3], spec.demand[1] + spec.demand[3], spec.demand[2]});
  double best = -INFINITY;
  for (int a = 0; a * step <= t_max + 1e-12; ++a)
    for (int b = 0; b <= a && b * step <= spec.demand[3] + 1e-12; ++b) {
      const double t = a * step, s = b * step;
      const Eigen::Vector4d z(t - s, t - s, t, s);
      const auto ev = optimizer::evaluate_solution(spec, z);
      if (testsupport::exactly_feasible(spec, ev, 1e-9)) best = std::max(best, ev.objective);
    }
  return best;
}

// With omega = 1 and no mean-noise bound the objective is a concave function of
// z and every noise cap is a linear bound on M^T y, so each instance is unimodal.
Outcome ccp_bracket() {
  Rng rng(7);
  int failures = 0, binding = 0;
  double worst_ratio = INFINITY, mean_iters = 0;
  std::string notes;
  for (int k = 0; k < 20; ++k) {
    auto spec = testsupport::random_triangle_spec(rng);
    spec.omega = 1.0;
    spec.delta_n_max = rng.uniform(2.0, 20.0);
    const double best = grid_optimum(spec);
    const auto sol = tracked(spec);
    mean_iters += sol.iterations / 20.0;
    binding += sol.eval.max_noise_increase >= spec.delta_n_max - 1e-3;
    const bool feasible = (sol.status == optimizer::Status::Converged || sol.status == optimizer::Status::IterationCap) &&
                          testsupport::exactly_feasible(spec, sol.eval);
    const double ratio = best > 0 ? sol.objective / best : (sol.objective >= best ? 1.0 : 0.0);
    worst_ratio = std::min(worst_ratio, ratio);
    if (!feasible || ratio < 0.98) {
      ++failures;
      notes += fmt(" [#%d %s ratio %.4f]", k, optimizer::to_string(sol.status).c_str(), ratio);
    }
  }
  return {failures == 0, fmt("20 instances (noise cap binding in %d), worst CCP/grid %.4f, %d failures, %.1f CCP "
                             "iterations on average",
                             binding, worst_ratio, failures, mean_iters) +
                             notes};
}

const scenario::Instance& synthetic() {
  static const auto inst = scenario::instantiate(scenario::load_scenario(source("scenarios/austin_like.json")));
  return inst;
}

Outcome qualitative() {
  const auto& base = synthetic().spec;
  auto run = [&](double omega, double delta, double p_u = INFINITY) {
    auto s = base;
    s.omega = omega;
    s.delta1 = s.delta2 = delta;
    s.p_u = p_u;
    return tracked(s);
  };
  auto ok = [](const optimizer::Solution& s) {
    return s.status == optimizer::Status::Converged || s.status == optimizer::Status::IterationCap;
  };
  // (a)
  const auto util = run(1.0, harness::kUtilitarianDelta), egal = run(1.0, 0.0);
  const double su = util.eval.d.maxCoeff() - util.eval.d.minCoeff(), se = egal.eval.d.maxCoeff() - egal.eval.d.minCoeff();
  const long saturated = (util.eval.d.array() >= 1.0 - 1e-6).count(), zeros = (util.eval.d.array() <= 1e-6).count();
  const bool a = ok(util) && ok(egal) && saturated > 0 && zeros > 0 && se <= 0.5 * su;
  // (b)
  const auto cheap = run(0.5, 0.1, 1e-9), quiet = run(0.05, harness::kUtilitarianDelta);
  const double low = ok(cheap) ? cheap.eval.layer_share.front() : 0.0;
  const double high = ok(quiet) ? quiet.eval.layer_share.back() : 0.0;
  const bool b = low >= 0.95 && high >= 0.60;
  // (c)
  harness::SweepPlan plan;
  plan.omega = {0.25, 0.5, 0.75, 1.0};
  plan.delta1 = {0.0, 0.25, 1.0};
  plan.m_u = {INFINITY, 3.0};
  std::vector<harness::DesignPoint> pts;
  for (const auto& c : harness::expand(plan))
    pts.push_back(harness::summarize(c, tracked(harness::apply(base, c), harness::cell_options(plan, c, base.n_links()))));
  bool c = true;
  std::size_t rows = 0;
  for (auto aspect : {harness::Aspect::Demand, harness::Aspect::Noise}) {
    const auto t = harness::efficiency_fairness_curve(pts, aspect);
    rows += t.rows.size();
    c = c && t.bands > 0;
    for (const auto& x : t.rows)
      for (const auto& y : t.rows) {
        if (x.band != y.band || &x == &y) continue;
        const double gx = aspect == harness::Aspect::Demand ? x.mean : -x.mean;
        const double gy = aspect == harness::Aspect::Demand ? y.mean : -y.mean;
        if (gx >= gy && x.gini <= y.gini && (gx > gy || x.gini < y.gini)) c = false;
      }
  }
  return {a && b && c,
          fmt("(a) %s: utilitarian spread %.3f with %ld saturated / %ld zero entries, egalitarian spread %.3f (%.0f%% "
              "reduction); (b) %s: p_u~0 layer-1 share %.4f, omega 0.05 top-layer share %.3f; (c) %s: %zu curve rows from "
              "%zu cells",
              a ? "ok" : "no", su, saturated, zeros, se, su > 0 ? 100.0 * (1.0 - se / su) : 0.0, b ? "ok" : "no", low,
              high, c ? "ok" : "no", rows, pts.size())};
}

Outcome conservative() {
  // random toys on top of every CCP run made by the other checks in this process
  Rng rng(8);
  for (int trial = 0; trial < 60; ++trial) {
    auto spec = testsupport::random_triangle_spec(rng);
    spec.delta_n_max = rng.uniform(2.0, 25.0);
    if (rng.coin(0.5)) spec.m_u = rng.uniform(0.0, 6.0);
    optimizer::CcpOptions o;
    if (rng.coin(0.5)) {
      Eigen::VectorXd y0(3);
      for (auto& v : y0) v = rng.uniform(0.0, 10.0);
      o.y0 = y0;
    }
    tracked(spec, o);
  }
  const bool ok = audit.worst_max <= 1e-6 && (audit.worst_mean <= 1e-6 || !std::isfinite(audit.worst_mean));
  return {ok, fmt("%ld iterates from %ld CCP runs; worst excess over delta_n_max %.3g dB, over m_u %.3g dB", audit.iterates,
                  audit.runs, audit.worst_max, audit.worst_mean)};
}

Outcome determinism() {
  const auto plan = harness::load_plan(source("plans/quick.json"));
  const auto base = scenario::instantiate(scenario::load_scenario(plan.scenario)).spec;
  auto csv = [&](int workers) {
    std::ostringstream os;
    const auto pts = harness::run_sweep(base, plan, workers);
    harness::write_points_csv(os, pts);
    return os.str();
  };
  const std::string ref = csv(1);
  bool same = true;
  for (int w : {1, 2, 4}) same = same && csv(w) == ref;
  return {same, fmt("%zu cells, %zu CSV bytes identical across runs with 1, 2 and 4 workers: %s", plan.cells(), ref.size(),
                    same ? "yes" : "no")};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
  double limit_s;  // 0: no limit
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i)
    if (!std::strcmp(argv[i], "--only") && i + 1 < argc) only = std::atoi(argv[++i]);
  const std::vector<Criterion> all{
      {1, "energy anchors", energy_anchors, 1},
      {2, "extra-energy ranges", extra_energy_ranges, 5},
      {3, "noise oracle equivalence", noise_oracle, 5},
      {4, "NPD fidelity", npd_fidelity, 0},
      {5, "SWF/Gini properties", swf_gini_properties, 5},
      {6, "LP transformation losslessness", lp_losslessness, 0},
      {7, "CCP brute-force bracket", ccp_bracket, 120},
      {9, "qualitative synthetic reproductions", qualitative, 600},
      {10, "determinism", determinism, 0},
      {8, "conservative feasibility", conservative, 0},  // last: audits the runs above
  };
  int failed = 0;
  for (const auto& c : all) {
    if (only && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0 && secs > c.limit_s) {
      o.pass = false;
      o.detail += fmt("; runtime %.1f s exceeds %.0f s", secs, c.limit_s);
    }
    failed += !o.pass;
    std::cout << fmt("%s %2d %s (%.2f s): ", o.pass ? "PASS" : "FAIL", c.id, c.name, secs) << o.detail << std::endl;
  }
  return failed ? 1 : 0;
}
