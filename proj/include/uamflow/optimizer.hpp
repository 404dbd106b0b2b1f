#pragma once

// Noise-aware flow allocation: the epigraph-form linear program around a
// linearization point of community noise, and the convex-concave procedure
// that re-linearizes at each LP solution.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "uamflow/acoustics.hpp"
#include "uamflow/energy.hpp"
#include "uamflow/errors.hpp"
#include "uamflow/exposure.hpp"
#include "uamflow/lp.hpp"
#include "uamflow/network.hpp"
#include "uamflow/welfare.hpp"

namespace uamflow::optimizer {

inline constexpr double kLog10Scale = 10.0 / 2.302585092994046;  // 10 / ln 10

struct ProblemSpec {
  network::NetworkTopology topology;
  network::IncidenceMatrices mats;
  Eigen::MatrixXd M;          // n_l x n_c energy-domain impact
  Eigen::VectorXd ambient;    // a, dBA
  Eigen::VectorXd demand;     // e, flights per hour
  Eigen::VectorXd cap_vertiport, cap_link, cap_waypoint;
  Eigen::VectorXd extra_energy;  // p, per route
  double omega = 0.5;
  double delta1 = 0.1;
  double delta2 = 0.1;
  double delta_n_max = 25.0;
  double m_u = std::numeric_limits<double>::infinity();
  double p_u = std::numeric_limits<double>::infinity();
  double epsilon = 0.0;
  double period_s = 3600.0;

  Eigen::Index n_links() const { return mats.E.cols(); }
  Eigen::Index n_routes() const { return mats.F.cols(); }
  Eigen::Index n_od() const { return mats.H.rows(); }
  Eigen::Index n_communities() const { return M.cols(); }

  std::vector<std::string> problems() const {
    std::vector<std::string> p;
    const auto nl = n_links(), nr = n_routes();
    if (mats.F.rows() != nl) p.push_back("F rows must equal the link count");
    if (mats.H.cols() != nr || mats.J.cols() != nr) p.push_back("H and J must have one column per route");
    if (mats.K.rows() != mats.E.rows() || mats.K.cols() != nl) p.push_back("K must match E");
    if (M.rows() != nl) p.push_back("M rows must equal the link count");
    if (ambient.size() != M.cols()) p.push_back("ambient length must equal the community count");
    if (demand.size() != n_od()) p.push_back("demand length must equal the O-D count");
    if (cap_vertiport.size() != mats.J.rows()) p.push_back("vertiport capacity length mismatch");
    if (cap_link.size() != nl) p.push_back("link capacity length mismatch");
    if (cap_waypoint.size() != mats.E.rows()) p.push_back("waypoint capacity length mismatch");
    if (extra_energy.size() != nr) p.push_back("extra energy length must equal the route count");
    if (n_od() == 0) p.push_back("at least one O-D pair is required");
    if (M.cols() == 0) p.push_back("at least one community is required");
    for (Eigen::Index i = 0; i < demand.size(); ++i)
      if (!(demand[i] > 0.0)) { p.push_back("O-D demand must be positive"); break; }
    if ((M.array() < 0.0).any()) p.push_back("M must be nonnegative");
    if (!(omega >= 0.0 && omega <= 1.0)) p.push_back("omega must lie in [0, 1]");
    if (!(delta1 >= 0.0) || !(delta2 >= 0.0)) p.push_back("fairness thresholds must be nonnegative");
    if (!(delta_n_max > 0.0)) p.push_back("delta_n_max must be positive");
    if (!(m_u >= 0.0)) p.push_back("m_u must be nonnegative");
    if (!(p_u >= 0.0)) p.push_back("p_u must be nonnegative");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) p.push_back("epsilon must lie in [0, 1]");
    if (!(period_s > 0.0)) p.push_back("period must be positive");
    return p;
  }

  void validate() const {
    if (auto p = problems(); !p.empty()) throw ValidationError(std::move(p));
  }
};

// ---------------------------------------------------------------------------
// Linearization

/// Tangent of n(y) = 10 log10(M^T y) - offset around y_hat, one row per
/// community. Communities whose M column is zero have no row.
struct NoiseLinearization {
  Eigen::MatrixXd A;           // n_c x n_l
  Eigen::VectorXd b;           // tangent value at y_hat
  Eigen::VectorXd point;       // energy at which the tangent touches (x0)
  std::vector<char> has_row;   // false where M column is identically zero

  /// A (y - y_hat) + b
  Eigen::VectorXd evaluate(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat) const {
    return A * (y - y_hat) + b;
  }
};

/// Energy at which community noise equals its ambient level.
inline Eigen::VectorXd ambient_energy_floor(const Eigen::VectorXd& ambient, double period_s) {
  const double offset = acoustics::duration_offset_db(period_s);
  return ambient.unaryExpr([offset](double a) { return std::pow(10.0, (a + offset) / 10.0); });
}

/// The tangent is taken at max(M_j^T y_hat, floor_j). With no floor (or energy
/// above it) this is the exact first-order expansion; below the floor the
/// tangent touches at the floor, which still upper-bounds the concave log.
inline NoiseLinearization linearize_noise(const Eigen::MatrixXd& M, const Eigen::VectorXd& y_hat,
                                          double period_s = 3600.0,
                                          const std::optional<Eigen::VectorXd>& floor = {}) {
  if (M.rows() != y_hat.size()) throw UsageError("linearize_noise: y_hat length must match M rows");
  if (floor && floor->size() != M.cols())
    throw UsageError("linearize_noise: floor length must match M columns");
  const double offset = acoustics::duration_offset_db(period_s);
  const auto nc = M.cols();
  NoiseLinearization lin;
  lin.A = Eigen::MatrixXd::Zero(nc, M.rows());
  lin.b = Eigen::VectorXd::Zero(nc);
  lin.point = Eigen::VectorXd::Zero(nc);
  lin.has_row.assign(static_cast<std::size_t>(nc), 0);
  const Eigen::VectorXd s = M.transpose() * y_hat;
  for (Eigen::Index j = 0; j < nc; ++j) {
    if (!(M.col(j).array() > 0.0).any()) continue;
    double x0 = s[j];
    if (floor) x0 = std::max(x0, (*floor)[j]);
    if (!(x0 > 0.0))
      throw DomainError("linearize_noise: zero energy at the linearization point needs a floor");
    lin.has_row[static_cast<std::size_t>(j)] = 1;
    lin.point[j] = x0;
    lin.A.row(j) = kLog10Scale * M.col(j).transpose() / x0;
    lin.b[j] = 10.0 * std::log10(x0) - offset + kLog10Scale * (s[j] - x0) / x0;
  }
  return lin;
}

// ---------------------------------------------------------------------------
// LP assembly

struct VariableMap {
  int y = 0, z = 0, d = 0, w = 0, u = 0, d_min = 0, v = 0, s_min = 0;
  int n_links = 0, n_routes = 0, n_od = 0, n_comm = 0;
};

struct LpModel {
  lp::Model model;
  VariableMap vars;
  /// Constant added to the LP objective to obtain the welfare objective
  /// (omega * Delta1 + (1 - omega) * Delta2).
  double objective_constant = 0.0;
};

inline LpModel assemble_lp(const ProblemSpec& spec, const Eigen::VectorXd& y_hat,
                           const NoiseLinearization& lin) {
  spec.validate();
  const int nl = static_cast<int>(spec.n_links());
  const int nr = static_cast<int>(spec.n_routes());
  const int no = static_cast<int>(spec.n_od());
  const int nc = static_cast<int>(spec.n_communities());
  if (y_hat.size() != nl || lin.A.rows() != nc || lin.A.cols() != nl)
    throw UsageError("assemble_lp: linearization dimensions do not match the problem");
  const double inf = lp::kInf;
  const double scale = 1.0 - spec.epsilon;

  LpModel out;
  auto& m = out.model;
  m.maximize = true;
  auto& vm = out.vars;
  vm.n_links = nl;
  vm.n_routes = nr;
  vm.n_od = no;
  vm.n_comm = nc;

  vm.y = m.cols();
  for (int i = 0; i < nl; ++i)
    m.add_variable("y" + std::to_string(i), 0.0, std::isfinite(spec.cap_link[i]) ? scale * spec.cap_link[i] : inf);
  vm.z = m.cols();
  for (int r = 0; r < nr; ++r) m.add_variable("z" + std::to_string(r), 0.0, inf);
  vm.d = m.cols();
  for (int o = 0; o < no; ++o) m.add_variable("d" + std::to_string(o), 0.0, 1.0);
  vm.w = m.cols();
  for (int j = 0; j < nc; ++j) m.add_variable("w" + std::to_string(j), 0.0, spec.delta_n_max);
  vm.u = m.cols();
  for (int o = 0; o < no; ++o) m.add_variable("u" + std::to_string(o), -inf, inf, spec.omega / no);
  vm.d_min = m.add_variable("d_min", -inf, inf);
  vm.v = m.cols();
  for (int j = 0; j < nc; ++j)
    m.add_variable("v" + std::to_string(j), -inf, inf, (1.0 - spec.omega) / nc);
  vm.s_min = m.add_variable("s_min", -inf, inf);
  out.objective_constant = spec.omega * spec.delta1 + (1.0 - spec.omega) * spec.delta2;

  using Row = std::vector<std::pair<int, double>>;
  const auto& E = spec.mats.E;
  const auto& F = spec.mats.F;
  const auto& H = spec.mats.H;
  const auto& J = spec.mats.J;
  const auto& K = spec.mats.K;

  // Flow: E y = 0, F z - y = 0, d - diag(e)^-1 H z = 0
  for (Eigen::Index n = 0; n < E.rows(); ++n) {
    Row row;
    for (int i = 0; i < nl; ++i)
      if (E(n, i) != 0.0) row.emplace_back(vm.y + i, E(n, i));
    if (!row.empty()) m.add_row("conservation" + std::to_string(n), row, lp::Sense::Equal, 0.0);
  }
  for (int i = 0; i < nl; ++i) {
    Row row{{vm.y + i, -1.0}};
    for (int r = 0; r < nr; ++r)
      if (F(i, r) != 0.0) row.emplace_back(vm.z + r, F(i, r));
    m.add_row("route_link" + std::to_string(i), row, lp::Sense::Equal, 0.0);
  }
  for (int o = 0; o < no; ++o) {
    Row row{{vm.d + o, 1.0}};
    for (int r = 0; r < nr; ++r)
      if (H(o, r) != 0.0) row.emplace_back(vm.z + r, -H(o, r) / spec.demand[o]);
    m.add_row("demand" + std::to_string(o), row, lp::Sense::Equal, 0.0);
  }

  // Capacity: J z <= (1-eps) c_v, K y <= (1-eps) c_w (y bound handled above)
  for (Eigen::Index v = 0; v < J.rows(); ++v) {
    if (!std::isfinite(spec.cap_vertiport[v])) continue;
    Row row;
    for (int r = 0; r < nr; ++r)
      if (J(v, r) != 0.0) row.emplace_back(vm.z + r, J(v, r));
    if (!row.empty())
      m.add_row("vertiport_cap" + std::to_string(v), row, lp::Sense::LessEqual,
                scale * spec.cap_vertiport[v]);
  }
  for (Eigen::Index n = 0; n < K.rows(); ++n) {
    if (!std::isfinite(spec.cap_waypoint[n])) continue;
    Row row;
    for (int i = 0; i < nl; ++i)
      if (K(n, i) != 0.0) row.emplace_back(vm.y + i, K(n, i));
    if (!row.empty())
      m.add_row("waypoint_cap" + std::to_string(n), row, lp::Sense::LessEqual,
                scale * spec.cap_waypoint[n]);
  }

  // Noise: w_j >= A_j (y - y_hat) + b_j - a_j
  for (int j = 0; j < nc; ++j) {
    if (!lin.has_row[static_cast<std::size_t>(j)]) continue;
    Row row{{vm.w + j, 1.0}};
    for (int i = 0; i < nl; ++i)
      if (lin.A(j, i) != 0.0) row.emplace_back(vm.y + i, -lin.A(j, i));
    const double rhs = lin.b[j] - lin.A.row(j).dot(y_hat) - spec.ambient[j];
    m.add_row("noise" + std::to_string(j), row, lp::Sense::GreaterEqual, rhs);
  }
  if (std::isfinite(spec.m_u)) {
    Row row;
    for (int j = 0; j < nc; ++j) row.emplace_back(vm.w + j, 1.0 / nc);
    m.add_row("mean_noise", row, lp::Sense::LessEqual, spec.m_u);
  }

  // Energy: p^T z - p_u 1^T z <= 0
  if (std::isfinite(spec.p_u)) {
    Row row;
    for (int r = 0; r < nr; ++r) {
      const double c = spec.extra_energy[r] - spec.p_u;
      if (c != 0.0) row.emplace_back(vm.z + r, c);
    }
    if (!row.empty()) m.add_row("energy", row, lp::Sense::LessEqual, 0.0);
  }

  // Demand epigraph: u <= d - Delta1, u <= d_min, d_min <= d
  for (int o = 0; o < no; ++o) {
    m.add_row("u_gap" + std::to_string(o), {{vm.u + o, 1.0}, {vm.d + o, -1.0}}, lp::Sense::LessEqual,
              -spec.delta1);
    m.add_row("u_min" + std::to_string(o), {{vm.u + o, 1.0}, {vm.d_min, -1.0}}, lp::Sense::LessEqual, 0.0);
    m.add_row("d_min" + std::to_string(o), {{vm.d_min, 1.0}, {vm.d + o, -1.0}}, lp::Sense::LessEqual, 0.0);
  }
  // Noise epigraph on s = 1 - w / Delta_max:
  // v <= s - Delta2, v <= s_min, s_min <= s
  const double inv = 1.0 / spec.delta_n_max;
  for (int j = 0; j < nc; ++j) {
    m.add_row("v_gap" + std::to_string(j), {{vm.v + j, 1.0}, {vm.w + j, inv}}, lp::Sense::LessEqual,
              1.0 - spec.delta2);
    m.add_row("v_min" + std::to_string(j), {{vm.v + j, 1.0}, {vm.s_min, -1.0}}, lp::Sense::LessEqual, 0.0);
    m.add_row("s_min" + std::to_string(j), {{vm.s_min, 1.0}, {vm.w + j, inv}}, lp::Sense::LessEqual, 1.0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

/// Share of route flow carried by each layer; zeros when there is no flow.
inline std::vector<double> layer_flow_share(const network::NetworkTopology& t,
                                            const Eigen::VectorXd& z) {
  std::vector<double> share(t.layers(), 0.0);
  const double total = z.sum();
  if (!(total > 0.0)) return share;
  for (std::size_t r = 0; r < t.routes.size(); ++r)
    share.at(static_cast<std::size_t>(t.routes[r].layer)) += z[static_cast<Eigen::Index>(r)];
  for (double& s : share) s /= total;
  return share;
}

struct Evaluation {
  Eigen::VectorXd y, z, d;
  std::vector<acoustics::Level> n;
  Eigen::VectorXd n_prime;
  double p_a = 0.0;
  double mean_d = 0.0;
  double mean_noise_increase = 0.0;
  double max_noise_increase = 0.0;
  double gini_d = 0.0;
  double gini_noise = 0.0;
  double objective = 0.0;
  std::vector<double> layer_share;
};

inline double true_objective(const ProblemSpec& spec, const Eigen::VectorXd& d,
                             const Eigen::VectorXd& n_prime) {
  const Eigen::VectorXd s = Eigen::VectorXd::Ones(n_prime.size()) - n_prime / spec.delta_n_max;
  return spec.omega * welfare::fairness_threshold_swf({d.data(), static_cast<std::size_t>(d.size())}, spec.delta1) +
         (1.0 - spec.omega) *
             welfare::fairness_threshold_swf({s.data(), static_cast<std::size_t>(s.size())}, spec.delta2);
}

inline Evaluation evaluate_solution(const ProblemSpec& spec, const Eigen::VectorXd& z) {
  if (z.size() != spec.n_routes()) throw UsageError("evaluate_solution: z length must equal route count");
  Evaluation ev;
  ev.z = z.cwiseMax(0.0);  // roundoff from the LP
  ev.y = spec.mats.F * ev.z;
  ev.d = (spec.mats.H * ev.z).cwiseQuotient(spec.demand);
  ev.n = exposure::cumulative_noise(spec.M, ev.y, spec.period_s);
  ev.n_prime = exposure::noise_increase(ev.n, spec.ambient);
  ev.p_a = energy::average_extra_energy(spec.extra_energy, ev.z);
  ev.mean_d = ev.d.mean();
  ev.mean_noise_increase = ev.n_prime.mean();
  ev.max_noise_increase = ev.n_prime.maxCoeff();
  ev.gini_d = welfare::gini({ev.d.data(), static_cast<std::size_t>(ev.d.size())});
  ev.gini_noise = welfare::gini({ev.n_prime.data(), static_cast<std::size_t>(ev.n_prime.size())});
  ev.objective = true_objective(spec, ev.d, ev.n_prime);
  ev.layer_share = layer_flow_share(spec.topology, ev.z);
  return ev;
}

// ---------------------------------------------------------------------------
// Single LP solve and CCP

struct LpSolution {
  lp::Status status = lp::Status::NumericalFailure;
  std::string message;
  Eigen::VectorXd y, z, d, w, u, v;
  double d_min = 0.0, s_min = 0.0;
  double objective = 0.0;  // LP objective, without the Delta constant
  double objective_constant = 0.0;
  long iterations = 0;
  lp::Basis basis;
};

inline LpSolution solve_approximation(const ProblemSpec& spec, const Eigen::VectorXd& y_hat,
                                      lp::Solver& solver, const lp::Options& opts = {},
                                      const lp::Basis* warm = nullptr) {
  const auto lin = linearize_noise(spec.M, y_hat, spec.period_s,
                                   ambient_energy_floor(spec.ambient, spec.period_s));
  const LpModel lm = assemble_lp(spec, y_hat, lin);
  const lp::Result r = solver.solve(lm.model, opts, warm);
  LpSolution s;
  s.status = r.status;
  s.message = r.message;
  s.iterations = r.iterations;
  s.objective_constant = lm.objective_constant;
  s.basis = r.basis;
  if (r.status != lp::Status::Optimal) return s;
  const auto& vm = lm.vars;
  auto slice = [&](int start, int len) {
    return Eigen::Map<const Eigen::VectorXd>(r.x.data() + start, len).eval();
  };
  s.y = slice(vm.y, vm.n_links);
  s.z = slice(vm.z, vm.n_routes);
  s.d = slice(vm.d, vm.n_od);
  s.w = slice(vm.w, vm.n_comm);
  s.u = slice(vm.u, vm.n_od);
  s.v = slice(vm.v, vm.n_comm);
  s.d_min = r.x[static_cast<std::size_t>(vm.d_min)];
  s.s_min = r.x[static_cast<std::size_t>(vm.s_min)];
  s.objective = r.objective;
  return s;
}

enum class Status { Converged, IterationCap, Infeasible, SolverError };

inline std::string to_string(Status s) {
  switch (s) {
    case Status::Converged: return "converged";
    case Status::IterationCap: return "iteration_cap";
    case Status::Infeasible: return "infeasible";
    case Status::SolverError: return "solver_error";
  }
  return "unknown";
}

inline Status status_from_string(const std::string& s) {
  for (Status x : {Status::Converged, Status::IterationCap, Status::Infeasible, Status::SolverError})
    if (to_string(x) == s) return x;
  throw UsageError("unknown status '" + s + "'");
}

struct CcpOptions {
  double tolerance = 1e-4;
  int max_iterations = 50;
  double initial_flow = 0.01;               // uniform y_hat_0 when no start is given
  std::optional<Eigen::VectorXd> y0;
  double monotone_tolerance = 1e-6;
  std::string backend = "revised-simplex";
  lp::Options lp;
};

struct IterateRecord {
  double lp_objective = 0.0;
  double true_objective = 0.0;
  double max_noise_increase = 0.0;
  double mean_noise_increase = 0.0;
  long lp_iterations = 0;
};

struct Solution {
  Status status = Status::SolverError;
  std::string message;
  Evaluation eval;
  std::vector<double> ccp_trace;  // LP objective per iteration
  std::vector<IterateRecord> iterates;
  int iterations = 0;
  bool monotone = true;
  double objective = 0.0;  // true objective at the returned iterate
};

inline Solution ccp_solve(const ProblemSpec& spec, const CcpOptions& opts = {}) {
  spec.validate();
  if (!(opts.tolerance >= 0.0)) throw UsageError("CCP tolerance must be nonnegative");
  if (opts.max_iterations < 1) throw UsageError("CCP needs at least one iteration");
  auto solver = lp::make_solver(opts.backend);
  Eigen::VectorXd y_hat = opts.y0 ? *opts.y0 : Eigen::VectorXd::Constant(spec.n_links(), opts.initial_flow);
  if (y_hat.size() != spec.n_links()) throw UsageError("initial flow length must equal link count");
  if ((y_hat.array() < 0.0).any()) throw DomainError("initial flow must be nonnegative");

  Solution sol;
  lp::Basis basis;
  double prev = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < opts.max_iterations; ++k) {
    LpSolution s = solve_approximation(spec, y_hat, *solver, opts.lp, basis.empty() ? nullptr : &basis);
    if (s.status != lp::Status::Optimal) {
      sol.status = s.status == lp::Status::Infeasible ? Status::Infeasible : Status::SolverError;
      sol.message = "LP at CCP iteration " + std::to_string(k + 1) + ": " + lp::to_string(s.status) +
                    (s.message.empty() ? "" : " (" + s.message + ")");
      sol.iterations = k + 1;
      if (k > 0) sol.objective = sol.eval.objective;
      return sol;
    }
    basis = std::move(s.basis);
    sol.eval = evaluate_solution(spec, s.z);
    sol.iterations = k + 1;
    sol.ccp_trace.push_back(s.objective);
    sol.iterates.push_back({s.objective, sol.eval.objective, sol.eval.max_noise_increase,
                            sol.eval.mean_noise_increase, s.iterations});
    if (s.objective < prev - opts.monotone_tolerance) sol.monotone = false;
    const bool converged = std::abs(s.objective - prev) <= opts.tolerance;
    prev = s.objective;
    y_hat = sol.eval.y;
    if (converged) {
      sol.status = Status::Converged;
      sol.objective = sol.eval.objective;
      return sol;
    }
  }
  sol.status = Status::IterationCap;
  sol.message = "CCP stopped after " + std::to_string(opts.max_iterations) + " iterations";
  sol.objective = sol.eval.objective;
  return sol;
}

}  // namespace uamflow::optimizer
