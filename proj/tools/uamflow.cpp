// uamflow command-line entry points.
//
// Exit codes: 0 success, 1 solver or runtime failure, 2 invalid input or usage.
// Failures print a single JSON object {"error": {...}} on stderr and remove
// any files this invocation had already written.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "uamflow.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace uamflow;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Failure carrying an exit code; thrown after outputs are known to be bad.
struct CommandFailure : std::runtime_error {
  CommandFailure(std::string kind, const std::string& msg, int code)
      : std::runtime_error(msg), kind(std::move(kind)), code(code) {}
  std::string kind;
  int code;
};

/// Files written by the current command, removed again if it fails.
class Outputs {
 public:
  void set_dir(const std::string& dir) {
    dir_ = dir.empty() ? fs::path(".") : fs::path(dir);
    if (!fs::exists(dir_)) {
      fs::create_directories(dir_);
      created_dir_ = true;
    }
  }

  fs::path path(const std::string& name) const { return dir_ / name; }

  void write(const fs::path& p, const std::string& content) {
    written_.push_back(p);
    std::ofstream out(p, std::ios::binary);
    if (!out) throw CommandFailure("io", "cannot write '" + p.string() + "'", 1);
    out << content;
    if (!out) throw CommandFailure("io", "failed writing '" + p.string() + "'", 1);
  }

  void write_json(const std::string& name, const json& j) { write(path(name), j.dump(2) + "\n"); }

  template <class F>
  void write_stream(const std::string& name, F&& emit) {
    std::ostringstream os;
    emit(os);
    write(path(name), os.str());
  }

  void rollback() noexcept {
    std::error_code ec;
    for (const auto& p : written_) fs::remove(p, ec);
    if (created_dir_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
    written_.clear();
  }

  std::vector<std::string> files() const {
    std::vector<std::string> out;
    for (const auto& p : written_) out.push_back(p.string());
    return out;
  }

 private:
  fs::path dir_ = ".";
  bool created_dir_ = false;
  std::vector<fs::path> written_;
};

void emit_error(const std::string& kind, const std::string& message,
                const std::vector<std::string>& problems = {}) {
  json e = {{"kind", kind}, {"message", message}};
  if (!problems.empty()) e["problems"] = problems;
  std::cerr << json{{"error", e}}.dump() << std::endl;
}

// Parameters shared by solve, export-noise-map and compare. Unset values keep
// the scenario defaults.
struct ParamFlags {
  std::optional<double> omega, delta1, delta2, delta, m_u, p_u, delta_n_max, epsilon;

  void add(CLI::App* app) {
    app->add_option("--omega", omega, "Weight on demand fulfillment, in [0, 1]")->check(CLI::Range(0.0, 1.0));
    app->add_option("--delta1", delta1, "Fairness threshold for demand fulfillment")->check(CLI::NonNegativeNumber);
    app->add_option("--delta2", delta2, "Fairness threshold for noise mitigation")->check(CLI::NonNegativeNumber);
    app->add_option("--delta", delta, "Set both fairness thresholds")->check(CLI::NonNegativeNumber);
    app->add_option("--m-u", m_u, "Upper bound on mean noise increase (dB); inf disables");
    app->add_option("--p-u", p_u, "Upper bound on average extra energy (fraction); inf disables");
    app->add_option("--delta-n-max", delta_n_max, "Per-community noise increase cap (dB)");
    app->add_option("--epsilon", epsilon, "Link capacity safety margin, in [0, 1)");
  }

  void apply(optimizer::ProblemSpec& s) const {
    if (omega) s.omega = *omega;
    if (delta) s.delta1 = s.delta2 = *delta;
    if (delta1) s.delta1 = *delta1;
    if (delta2) s.delta2 = *delta2;
    if (m_u) s.m_u = *m_u;
    if (p_u) s.p_u = *p_u;
    if (delta_n_max) s.delta_n_max = *delta_n_max;
    if (epsilon) s.epsilon = *epsilon;
  }
};

struct SolverFlags {
  std::string backend = "revised-simplex";
  double ccp_tol = 1e-4;
  int max_iter = 50;
  long lp_max_iter = 200000;

  void add(CLI::App* app) {
    app->add_option("--solver", backend, "LP backend")
        ->check(CLI::IsMember({"revised-simplex", "simplex"}))
        ->capture_default_str();
    app->add_option("--ccp-tol", ccp_tol, "CCP convergence tolerance on the objective")
        ->envname("UAMFLOW_CCP_TOL")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    app->add_option("--max-iter", max_iter, "CCP iteration cap")
        ->envname("UAMFLOW_MAX_ITER")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--lp-max-iter", lp_max_iter, "Simplex iteration cap per LP")
        ->envname("UAMFLOW_LP_MAX_ITER")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  }

  optimizer::CcpOptions options() const {
    optimizer::CcpOptions o;
    o.backend = backend;
    o.tolerance = ccp_tol;
    o.max_iterations = max_iter;
    o.lp.max_iterations = lp_max_iter;
    return o;
  }
};

json metrics_json(const optimizer::Solution& sol) {
  json m = {{"status", optimizer::to_string(sol.status)}, {"iterations", sol.iterations}};
  if (!sol.message.empty()) m["message"] = sol.message;
  if (sol.eval.z.size()) {
    const auto& ev = sol.eval;
    m["objective"] = ev.objective;
    m["mean_demand_fulfillment_pct"] = 100.0 * ev.mean_d;
    m["mean_noise_increase_db"] = ev.mean_noise_increase;
    m["max_noise_increase_db"] = ev.max_noise_increase;
    m["extra_energy_pct"] = 100.0 * ev.p_a;
    m["gini_demand"] = ev.gini_d;
    m["gini_noise"] = ev.gini_noise;
    m["layer_share"] = ev.layer_share;
  }
  return m;
}

bool solved(const optimizer::Solution& s) {
  return s.status == optimizer::Status::Converged || s.status == optimizer::Status::IterationCap;
}

scenario::Instance load_instance(const std::string& path) {
  return scenario::instantiate(scenario::load_scenario(path));
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  for (std::string x; std::getline(ss, x, ',');) out.push_back(std::stod(x));
  return out;
}

// ---------------------------------------------------------------------------

struct ValidateCmd {
  std::string scenario;

  void add(CLI::App& root) {
    auto* c = root.add_subcommand("validate", "Load a scenario and report every validation problem");
    c->add_option("scenario", scenario, "Scenario file")->required();
  }

  void run(Outputs&) const {
    const auto inst = load_instance(scenario);
    const auto& s = inst.spec;
    json j = {{"valid", true},
              {"name", inst.scenario.name},
              {"vertiports", inst.scenario.vertiports.size()},
              {"layers", inst.scenario.layer_altitudes_ft.size()},
              {"directed_links", s.n_links()},
              {"routes", s.n_routes()},
              {"od_pairs", s.n_od()},
              {"communities", s.n_communities()},
              {"warnings", inst.warnings}};
    std::cout << j.dump(2) << std::endl;
  }
};

struct GenCmd {
  scenario::SyntheticOptions opts;
  std::string out;
  std::string mix;
  std::string name = "austin-like (synthetic)";

  void add(CLI::App& root) {
    auto* c = root.add_subcommand("gen-scenario", "Generate a synthetic scenario");
    c->add_option("--out", out, "Output scenario file")->required();
    c->add_option("--seed", opts.seed, "Random seed")->capture_default_str();
    c->add_option("--vertiports", opts.n_vertiports, "Number of vertiports")->capture_default_str();
    c->add_option("--layers", opts.n_layers, "Number of altitude layers")->capture_default_str();
    c->add_option("--communities", opts.n_communities, "Number of communities")->capture_default_str();
    c->add_option("--width", opts.width_ft, "Area width (ft)")->capture_default_str();
    c->add_option("--height", opts.height_ft, "Area height (ft)")->capture_default_str();
    c->add_option("--ambient-mix", mix,
                  "Comma-separated class probabilities: quiet_suburban,normal_suburban,urban,noisy_urban,"
                  "very_noisy_urban");
    c->add_option("--max-links", opts.max_links, "Undirected link budget")->capture_default_str();
    c->add_option("--od-pairs", opts.od_pairs, "Directed O-D pairs (even)")->capture_default_str();
    c->add_option("--demand-min", opts.demand_min, "Smallest O-D demand (flights/h)")->capture_default_str();
    c->add_option("--demand-max", opts.demand_max, "Largest O-D demand (flights/h)")->capture_default_str();
    c->add_option("--link-capacity", opts.link_capacity, "Capacity per directed link")->capture_default_str();
    c->add_option("--vertiport-capacity", opts.vertiport_capacity, "Capacity per vertiport")
        ->capture_default_str();
    c->add_option("--waypoint-capacity", opts.waypoint_capacity, "Capacity per waypoint")
        ->capture_default_str();
    c->add_option("--name", name, "Scenario name")->capture_default_str();
  }

  void run(Outputs& o) {
    if (!mix.empty()) {
      const auto v = parse_list(mix);
      if (v.size() != opts.ambient_mix.size())
        throw ValidationError({"--ambient-mix: expected 5 probabilities"});
      std::copy(v.begin(), v.end(), opts.ambient_mix.begin());
    }
    auto s = scenario::generate_synthetic(opts);
    s.name = name;
    const fs::path p(out);
    if (p.has_parent_path()) o.set_dir(p.parent_path().string());
    o.write(p, scenario::to_json(s).dump(2) + "\n");
    std::cout << json{{"scenario", p.string()}, {"seed", opts.seed}}.dump() << std::endl;
  }
};

struct SolveCmd {
  std::string scenario, out = ".";
  ParamFlags params;
  SolverFlags solver;

  void add(CLI::App& root) {
    auto* c = root.add_subcommand("solve", "Solve one design; writes solution.json and metrics.json");
    c->add_option("--scenario", scenario, "Scenario file")->required();
    c->add_option("--out", out, "Output directory")->capture_default_str();
    params.add(c);
    solver.add(c);
  }

  void run(Outputs& o) const {
    auto inst = load_instance(scenario);
    params.apply(inst.spec);
    const auto sol = optimizer::ccp_solve(inst.spec, solver.options());
    o.set_dir(out);
    auto dump = harness::solution_json(inst.spec, sol);
    dump["warnings"] = inst.warnings;
    o.write_json("solution.json", dump);
    const auto m = metrics_json(sol);
    o.write_json("metrics.json", m);
    std::cout << m.dump(2) << std::endl;
    if (!solved(sol)) throw CommandFailure("solver", optimizer::to_string(sol.status) + ": " + sol.message, 1);
  }
};

struct SweepCmd {
  std::string plan_path, scenario, out;
  std::optional<std::uint64_t> seed;
  int workers = 1;

  void add(CLI::App& root) {
    auto* c = root.add_subcommand("sweep", "Run a parameter sweep; writes points, Pareto set and curves");
    c->add_option("--plan", plan_path, "Plan file")->required();
    c->add_option("--scenario", scenario, "Scenario file (overrides the plan)");
    c->add_option("--out", out, "Output directory (overrides the plan)");
    c->add_option("--seed", seed, "Replication seed (overrides the plan)");
    c->add_option("--workers", workers, "Concurrent cells")->check(CLI::PositiveNumber)->capture_default_str();
  }

  void run(Outputs& o) const {
    auto plan = harness::load_plan(plan_path);
    if (!scenario.empty()) plan.scenario = scenario;
    if (!out.empty()) plan.output_dir = out;
    if (seed) plan.seed = *seed;
    if (plan.scenario.empty()) throw ValidationError({"plan.scenario: no scenario given"});
    if (const char* t = std::getenv("UAMFLOW_CCP_TOL")) plan.ccp.tolerance = std::stod(t);
    if (const char* m = std::getenv("UAMFLOW_MAX_ITER")) plan.ccp.max_iterations = std::stoi(m);
    const auto inst = load_instance(plan.scenario);
    const auto points = harness::run_sweep(inst.spec, plan, workers);
    o.set_dir(plan.output_dir.empty() ? "." : plan.output_dir);
    o.write_stream("points.csv", [&](std::ostream& os) { harness::write_points_csv(os, points); });
    const auto front = harness::pareto_filter(points);
    o.write_stream("pareto.csv", [&](std::ostream& os) { harness::write_points_csv(os, front); });
    json warnings = json::array();
    for (auto [aspect, name] : {std::pair{harness::Aspect::Demand, "curve_demand.csv"},
                                std::pair{harness::Aspect::Noise, "curve_noise.csv"}}) {
      const auto t = harness::efficiency_fairness_curve(points, aspect);
      for (const auto& w : t.warnings) warnings.push_back(w);
      o.write_stream(name, [&](std::ostream& os) { harness::write_curve_csv(os, t); });
    }
    std::size_t failed = 0;
    for (const auto& p : points) failed += !p.ok();
    std::cout << json{{"cells", points.size()},
                      {"failed", failed},
                      {"pareto", front.size()},
                      {"warnings", warnings},
                      {"files", o.files()}}
                     .dump(2)
              << std::endl;
  }
};

struct ParetoCmd {
  std::string points, out = ".";

  void add(CLI::App& root) {
    auto* c = root.add_subcommand("pareto", "Filter a points CSV to its non-dominated set");
    c->add_option("--points", points, "points.csv from a sweep")->required()->check(CLI::ExistingFile);
    c->add_option("--out", out, "Output directory")->capture_default_str();
  }

  void run(Outputs& o) const {
    std::ifstream in(points);
    const auto pts = harness::read_points_csv(in);
    const auto front = harness::pareto_filter(pts);
    o.set_dir(out);
    o.write_stream("pareto.csv", [&](std::ostream& os) { harness::write_points_csv(os, front); });
    std::cout << json{{"points", pts.size()}, {"pareto", front.size()}}.dump() << std::endl;
  }
};

struct CompareCmd {
  std::string scenario, points, out = ".";
  std::vector<std::size_t> select;
  std::size_t limit = 8;
  SolverFlags solver;

  void add(CLI::App& root) {
    auto* c = root.add_subcommand("compare",
                                  "Re-solve selected designs under utilitarian and egalitarian criteria");
    c->add_option("--scenario", scenario, "Scenario file")->required();
    c->add_option("--points", points, "points.csv or pareto.csv from a sweep")->required()->check(CLI::ExistingFile);
    c->add_option("--select", select, "Grid indices to compare (default: first --limit Pareto points)")
        ->delimiter(',');
    c->add_option("--limit", limit, "Designs taken from the Pareto set when --select is absent")
        ->capture_default_str();
    c->add_option("--out", out, "Output directory")->capture_default_str();
    solver.add(c);
  }

  void run(Outputs& o) const {
    std::ifstream in(points);
    const auto pts = harness::read_points_csv(in);
    std::vector<harness::DesignPoint> chosen;
    if (select.empty()) {
      auto front = harness::pareto_filter(pts);
      if (front.size() > limit) front.resize(limit);
      chosen = std::move(front);
    } else {
      for (auto idx : select) {
        auto it = std::find_if(pts.begin(), pts.end(), [&](const auto& p) { return p.cell.index == idx; });
        if (it == pts.end()) throw ValidationError({"--select: no point with index " + std::to_string(idx)});
        chosen.push_back(*it);
      }
    }
    if (chosen.empty()) throw ValidationError({"compare: no designs selected"});
    const auto inst = load_instance(scenario);
    const std::array crit{harness::Criterion::Utilitarian, harness::Criterion::Egalitarian};
    const auto cmp = harness::compare_designs(inst.spec, chosen, crit, solver.options());
    o.set_dir(out);
    o.write_stream("boxplot.csv", [&](std::ostream& os) { harness::write_boxplot_csv(os, cmp); });
    o.write_stream("radar.csv", [&](std::ostream& os) { harness::write_radar_csv(os, cmp); });
    std::size_t failed = 0;
    for (const auto& r : cmp.rows) failed += r.failed;
    std::cout << json{{"designs", chosen.size()}, {"rows", cmp.rows.size()}, {"failed", failed}}.dump()
              << std::endl;
  }
};

struct NoiseMapCmd {
  std::string scenario, solution, out = ".";
  ParamFlags params;
  SolverFlags solver;

  void add(CLI::App& root) {
    auto* c = root.add_subcommand("export-noise-map",
                                  "Write per-community n, n' and reaction score as GeoJSON");
    c->add_option("--scenario", scenario, "Scenario file")->required();
    c->add_option("--solution", solution, "solution.json from solve (otherwise the design is solved here)")
        ->check(CLI::ExistingFile);
    c->add_option("--out", out, "Output directory")->capture_default_str();
    params.add(c);
    solver.add(c);
  }

  void run(Outputs& o) const {
    auto inst = load_instance(scenario);
    params.apply(inst.spec);
    optimizer::Evaluation ev;
    if (!solution.empty()) {
      std::ifstream in(solution);
      json j;
      try {
        j = json::parse(in);
      } catch (const json::parse_error& e) {
        throw ValidationError({solution + ": " + e.what()});
      }
      if (!j.contains("z") || !j["z"].is_array())
        throw ValidationError({solution + ": no route flow vector 'z'"});
      const auto z = j["z"].get<std::vector<double>>();
      if (static_cast<Eigen::Index>(z.size()) != inst.spec.n_routes())
        throw ValidationError({solution + ": 'z' has " + std::to_string(z.size()) + " entries, scenario has " +
                               std::to_string(inst.spec.n_routes()) + " routes"});
      ev = optimizer::evaluate_solution(inst.spec,
                                        Eigen::Map<const Eigen::VectorXd>(z.data(), inst.spec.n_routes()));
    } else {
      const auto sol = optimizer::ccp_solve(inst.spec, solver.options());
      if (!solved(sol)) throw CommandFailure("solver", optimizer::to_string(sol.status) + ": " + sol.message, 1);
      ev = sol.eval;
    }
    const welfare::ReactionScore reaction(inst.scenario.reaction_anchors);
    o.set_dir(out);
    o.write_json("noise_map.geojson", harness::noise_geojson(inst.scenario.communities, ev, reaction));
    std::cout << json{{"communities", inst.scenario.communities.size()},
                      {"max_noise_increase_db", ev.max_noise_increase}}
                     .dump()
              << std::endl;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fair and quiet routing of urban air mobility traffic"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "uamflow 0.1.0");

  ValidateCmd validate;
  GenCmd gen;
  SolveCmd solve;
  SweepCmd sweep;
  ParetoCmd pareto;
  CompareCmd compare;
  NoiseMapCmd noise_map;
  validate.add(app);
  gen.add(app);
  solve.add(app);
  sweep.add(app);
  pareto.add(app);
  compare.add(app);
  noise_map.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error("usage", e.what());
    return 2;
  }

  Outputs outputs;
  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    if (cmd == "validate") validate.run(outputs);
    else if (cmd == "gen-scenario") gen.run(outputs);
    else if (cmd == "solve") solve.run(outputs);
    else if (cmd == "sweep") sweep.run(outputs);
    else if (cmd == "pareto") pareto.run(outputs);
    else if (cmd == "compare") compare.run(outputs);
    else if (cmd == "export-noise-map") noise_map.run(outputs);
    return 0;
  } catch (const CommandFailure& e) {
    outputs.rollback();
    emit_error(e.kind, e.what());
    return e.code;
  } catch (const ValidationError& e) {
    outputs.rollback();
    emit_error("validation", std::to_string(e.problems().size()) + " problem(s)", e.problems());
    return 2;
  } catch (const UsageError& e) {
    outputs.rollback();
    emit_error("usage", e.what());
    return 2;
  } catch (const DomainError& e) {
    outputs.rollback();
    emit_error("domain", e.what());
    return 2;
  } catch (const std::exception& e) {
    outputs.rollback();
    emit_error("runtime", e.what());
    return 1;
  }
}
