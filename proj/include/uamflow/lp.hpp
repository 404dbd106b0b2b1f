#pragma once

// Linear programs in general bounded form and a revised primal simplex solver.
//
//   optimize  c^T x   s.t.  row_lower <= A x <= row_upper,  lower <= x <= upper
//
// The solver works on the computational form A x - r = 0 with one logical
// variable r_i per row carrying the row bounds. The basis is held as a sparse
// LU factorization of a reference basis plus a product-form eta file, and is
// refactorized periodically.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "uamflow/errors.hpp"

namespace uamflow::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { LessEqual, GreaterEqual, Equal };
enum class Status { Optimal, Infeasible, Unbounded, IterationLimit, NumericalFailure };

inline std::string to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::IterationLimit: return "iteration_limit";
    case Status::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

class Model {
 public:
  bool maximize = true;

  int add_variable(std::string name, double lower, double upper, double cost = 0.0) {
    if (lower > upper) throw UsageError("variable '" + name + "' has lower > upper");
    names_.push_back(std::move(name));
    lower_.push_back(lower);
    upper_.push_back(upper);
    cost_.push_back(cost);
    return static_cast<int>(cost_.size()) - 1;
  }

  int add_row(std::string name, const std::vector<std::pair<int, double>>& coeffs, Sense sense,
              double rhs) {
    const double lo = sense == Sense::LessEqual ? -kInf : rhs;
    const double hi = sense == Sense::GreaterEqual ? kInf : rhs;
    return add_ranged_row(std::move(name), coeffs, lo, hi);
  }

  int add_ranged_row(std::string name, const std::vector<std::pair<int, double>>& coeffs,
                     double lower, double upper) {
    if (lower > upper) throw UsageError("row '" + name + "' has lower > upper");
    const int r = rows();
    for (auto [j, a] : coeffs) {
      if (j < 0 || j >= cols()) throw UsageError("row '" + name + "' references missing variable");
      if (!std::isfinite(a)) throw DomainError("row '" + name + "' has a non-finite coefficient");
      if (a != 0.0) triplets_.emplace_back(r, j, a);
    }
    row_names_.push_back(std::move(name));
    row_lower_.push_back(lower);
    row_upper_.push_back(upper);
    return r;
  }

  void set_cost(int j, double c) { cost_.at(static_cast<std::size_t>(j)) = c; }
  void set_bounds(int j, double lo, double hi) {
    lower_.at(static_cast<std::size_t>(j)) = lo;
    upper_.at(static_cast<std::size_t>(j)) = hi;
  }

  int cols() const { return static_cast<int>(cost_.size()); }
  int rows() const { return static_cast<int>(row_lower_.size()); }
  const std::vector<double>& cost() const { return cost_; }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  const std::vector<double>& row_lower() const { return row_lower_; }
  const std::vector<double>& row_upper() const { return row_upper_; }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<std::string>& row_names() const { return row_names_; }
  std::size_t nonzeros() const { return triplets_.size(); }

  Eigen::SparseMatrix<double> matrix() const {
    Eigen::SparseMatrix<double> a(rows(), cols());
    a.setFromTriplets(triplets_.begin(), triplets_.end());
    a.makeCompressed();
    return a;
  }

 private:
  std::vector<std::string> names_, row_names_;
  std::vector<double> lower_, upper_, cost_, row_lower_, row_upper_;
  std::vector<Eigen::Triplet<double>> triplets_;
};

/// Variable status over structural then logical variables, for warm starts.
enum class VarStatus : std::uint8_t { Basic, AtLower, AtUpper, Free };

struct Basis {
  std::vector<VarStatus> status;  // cols + rows entries
  bool empty() const { return status.empty(); }
};

struct Options {
  long max_iterations = 200000;
  double primal_tol = 1e-9;
  double dual_tol = 1e-9;
  double pivot_tol = 1e-9;
  int refactor_interval = 64;
  int stall_before_bland = 50;
  /// Relative size of the deterministic bound perturbation used against
  /// degeneracy; 0 disables it. Bounds are restored before the final pass.
  double perturbation = 1e-6;
};

struct Result {
  Status status = Status::NumericalFailure;
  std::vector<double> x;         // structural values
  std::vector<double> activity;  // A x
  double objective = 0.0;
  long iterations = 0;
  Basis basis;
  std::string message;
};

/// Pluggable LP backend.
class Solver {
 public:
  virtual ~Solver() = default;
  virtual std::string name() const = 0;
  virtual Result solve(const Model& model, const Options& opts = {},
                       const Basis* warm = nullptr) = 0;
};

namespace detail {

class Simplex {
 public:
  Simplex(const Model& model, const Options& opts) : opts_(opts) {
    n_ = model.cols();
    m_ = model.rows();
    a_ = model.matrix();
    const int total = n_ + m_;
    lb_.resize(static_cast<std::size_t>(total));
    ub_.resize(static_cast<std::size_t>(total));
    cost_.assign(static_cast<std::size_t>(total), 0.0);
    for (int j = 0; j < n_; ++j) {
      lb_[j] = model.lower()[j];
      ub_[j] = model.upper()[j];
      cost_[j] = model.maximize ? -model.cost()[j] : model.cost()[j];
    }
    for (int i = 0; i < m_; ++i) {
      lb_[n_ + i] = model.row_lower()[i];
      ub_[n_ + i] = model.row_upper()[i];
    }
    x_.assign(static_cast<std::size_t>(total), 0.0);
    status_.assign(static_cast<std::size_t>(total), VarStatus::AtLower);
    pos_.assign(static_cast<std::size_t>(total), -1);
    head_.resize(static_cast<std::size_t>(m_));
  }

  Result run(const Basis* warm) {
    Result res;
    if (!(warm && install_warm(*warm))) install_slack();
    const std::vector<double> lb0 = lb_, ub0 = ub_;
    const bool perturbed = opts_.perturbation > 0.0;
    if (perturbed) perturb_bounds();
    if (!refactor()) {
      install_slack();
      if (!refactor()) return fail(res, "initial basis factorization failed");
    }
    if (!solve_loop(res)) return res;
    if (perturbed) {
      // Infeasible under widened bounds is infeasible as stated; otherwise
      // continue from the current basis on the original bounds.
      lb_ = lb0;
      ub_ = ub0;
      stall_ = 0;
      if (!refactor()) {
        install_slack();
        if (!refactor()) return fail(res, "basis factorization failed after removing perturbation");
      }
      if (res.status != Status::Infeasible && !solve_loop(res)) return res;
    }
    finish(res);
    return res;
  }

 private:
  static constexpr int kContinue = 0, kDone = 1, kSingular = 2;

  bool solve_loop(Result& res) {
    int resets = 0;
    for (;;) {
      const int step = iterate(res);
      if (step == kContinue) continue;
      if (step == kSingular) {
        if (++resets > 3) {
          fail(res, "repeated singular basis");
          return false;
        }
        install_slack();
        if (!refactor()) {
          fail(res, "slack basis factorization failed");
          return false;
        }
        continue;
      }
      return true;
    }
  }

  /// Widens every finite bound by a pseudo-random amount in
  /// [0.5, 1] * perturbation * (1 + |bound|). Fixed seed, so deterministic.
  void perturb_bounds() {
    std::uint64_t state = 0x9E3779B97F4A7C15ull;
    auto next = [&state] {
      state ^= state << 13;
      state ^= state >> 7;
      state ^= state << 17;
      return 0.5 + 0.5 * static_cast<double>(state >> 11) * 0x1.0p-53;
    };
    for (int j = 0; j < n_ + m_; ++j) {
      if (finite(lb_[j])) lb_[j] -= opts_.perturbation * (1.0 + std::abs(lb_[j])) * next();
      if (finite(ub_[j])) ub_[j] += opts_.perturbation * (1.0 + std::abs(ub_[j])) * next();
    }
  }

  bool finite(double v) const { return std::isfinite(v); }

  double nonbasic_value(int j) const {
    switch (status_[j]) {
      case VarStatus::AtLower: return lb_[j];
      case VarStatus::AtUpper: return ub_[j];
      default: return 0.0;
    }
  }

  VarStatus default_status(int j) const {
    if (finite(lb_[j])) return VarStatus::AtLower;
    if (finite(ub_[j])) return VarStatus::AtUpper;
    return VarStatus::Free;
  }

  void install_slack() {
    for (int j = 0; j < n_; ++j) {
      status_[j] = default_status(j);
      pos_[j] = -1;
    }
    for (int i = 0; i < m_; ++i) {
      head_[i] = n_ + i;
      status_[n_ + i] = VarStatus::Basic;
      pos_[n_ + i] = i;
    }
  }

  bool install_warm(const Basis& b) {
    if (static_cast<int>(b.status.size()) != n_ + m_) return false;
    int k = 0;
    for (int j = 0; j < n_ + m_; ++j)
      if (b.status[j] == VarStatus::Basic) ++k;
    if (k != m_) return false;
    k = 0;
    for (int j = 0; j < n_ + m_; ++j) {
      VarStatus s = b.status[j];
      if (s == VarStatus::Basic) {
        head_[k] = j;
        pos_[j] = k++;
      } else {
        pos_[j] = -1;
        if ((s == VarStatus::AtLower && !finite(lb_[j])) ||
            (s == VarStatus::AtUpper && !finite(ub_[j])) ||
            (s == VarStatus::Free && (finite(lb_[j]) || finite(ub_[j]))))
          s = default_status(j);
      }
      status_[j] = s;
    }
    return true;
  }

  /// Column j of [A, -I] scattered into `out` (dense, length m).
  void column(int j, Eigen::VectorXd& out) const {
    out.setZero(m_);
    if (j < n_) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(a_, j); it; ++it) out[it.row()] = it.value();
    } else {
      out[j - n_] = -1.0;
    }
  }

  double dot_column(const Eigen::VectorXd& pi, int j) const {
    if (j >= n_) return -pi[j - n_];
    double s = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(a_, j); it; ++it) s += pi[it.row()] * it.value();
    return s;
  }

  bool refactor() {
    std::vector<Eigen::Triplet<double>> t;
    for (int k = 0; k < m_; ++k) {
      const int j = head_[k];
      if (j < n_) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(a_, j); it; ++it)
          t.emplace_back(it.row(), k, it.value());
      } else {
        t.emplace_back(j - n_, k, -1.0);
      }
    }
    Eigen::SparseMatrix<double> b(m_, m_);
    b.setFromTriplets(t.begin(), t.end());
    b.makeCompressed();
    lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>>();
    lu_->analyzePattern(b);
    lu_->factorize(b);
    if (lu_->info() != Eigen::Success) return false;
    etas_.clear();
    recompute_primal();
    return true;
  }

  void recompute_primal() {
    // B xB = -N xN
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
    for (int j = 0; j < n_ + m_; ++j) {
      if (status_[j] == VarStatus::Basic) continue;
      x_[j] = nonbasic_value(j);
      if (x_[j] == 0.0) continue;
      if (j < n_) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(a_, j); it; ++it)
          rhs[it.row()] -= it.value() * x_[j];
      } else {
        rhs[j - n_] += x_[j];
      }
    }
    Eigen::VectorXd xb = ftran(rhs);
    for (int k = 0; k < m_; ++k) x_[head_[k]] = xb[k];
  }

  struct Eta {
    int row;
    double pivot;                                // 1 / alpha_r
    std::vector<std::pair<int, double>> others;  // (i, -alpha_i / alpha_r)
  };

  Eigen::VectorXd ftran(const Eigen::VectorXd& a) const {
    Eigen::VectorXd v = lu_->solve(a);
    for (const auto& e : etas_) {
      const double vr = v[e.row];
      if (vr == 0.0) continue;
      v[e.row] = e.pivot * vr;
      for (auto [i, c] : e.others) v[i] += c * vr;
    }
    return v;
  }

  Eigen::VectorXd btran(Eigen::VectorXd rho) const {
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double s = it->pivot * rho[it->row];
      for (auto [i, c] : it->others) s += c * rho[i];
      rho[it->row] = s;
    }
    return lu_->transpose().solve(rho);
  }

  /// Infeasibility of basic variable j: <0 below lower, >0 above upper.
  int infeasibility_sign(int j) const {
    const double tol = opts_.primal_tol * (1.0 + std::abs(x_[j]));
    if (x_[j] < lb_[j] - tol) return -1;
    if (x_[j] > ub_[j] + tol) return 1;
    return 0;
  }

  int iterate(Result& res) {
    if (res.iterations >= opts_.max_iterations) {
      res.status = Status::IterationLimit;
      res.message = "iteration limit reached";
      return kDone;
    }
    // Phase and basic costs.
    Eigen::VectorXd cb(m_);
    bool phase1 = false;
    for (int k = 0; k < m_; ++k) {
      const int s = infeasibility_sign(head_[k]);
      if (s != 0) phase1 = true;
      cb[k] = s;
    }
    if (!phase1)
      for (int k = 0; k < m_; ++k) cb[k] = cost_[head_[k]];
    const Eigen::VectorXd pi = btran(cb);

    // Pricing: Dantzig, lowest index on ties; Bland while stalling.
    const bool bland = stall_ >= opts_.stall_before_bland;
    int q = -1;
    double best = 0.0;
    double dq = 0.0;
    for (int j = 0; j < n_ + m_; ++j) {
      const VarStatus s = status_[j];
      if (s == VarStatus::Basic) continue;
      if (s != VarStatus::Free && lb_[j] == ub_[j]) continue;
      const double dj = (phase1 ? 0.0 : cost_[j]) - dot_column(pi, j);
      bool eligible = false;
      if (s == VarStatus::AtLower) eligible = dj < -opts_.dual_tol;
      else if (s == VarStatus::AtUpper) eligible = dj > opts_.dual_tol;
      else eligible = std::abs(dj) > opts_.dual_tol;
      if (!eligible) continue;
      if (bland) {
        q = j;
        dq = dj;
        break;
      }
      if (std::abs(dj) > best) {
        best = std::abs(dj);
        q = j;
        dq = dj;
      }
    }
    if (q < 0) {
      if (phase1) {
        res.status = Status::Infeasible;
        res.message = "no feasible point";
      } else {
        res.status = Status::Optimal;
      }
      return kDone;
    }
    ++res.iterations;
    const double dir = dq < 0.0 ? 1.0 : -1.0;
    Eigen::VectorXd aq;
    column(q, aq);
    const Eigen::VectorXd alpha = ftran(aq);

    // Harris two-pass ratio test. Basic k moves at rate -dir * alpha_k.
    auto limit = [&](int k, double rate, double slack) -> double {
      const int j = head_[k];
      const double xj = x_[j];
      const int inf = phase1 ? infeasibility_sign(j) : 0;
      if (rate < 0.0) {
        if (inf > 0) return (xj - ub_[j] + slack) / -rate;
        if (inf < 0 || !finite(lb_[j])) return kInf;
        return (xj - lb_[j] + slack) / -rate;
      }
      if (inf < 0) return (lb_[j] - xj + slack) / rate;
      if (inf > 0 || !finite(ub_[j])) return kInf;
      return (ub_[j] - xj + slack) / rate;
    };
    double tmax = kInf;
    for (int k = 0; k < m_; ++k) {
      if (std::abs(alpha[k]) <= opts_.pivot_tol) continue;
      tmax = std::min(tmax, limit(k, -dir * alpha[k], opts_.primal_tol));
    }
    int r = -1;
    double theta = kInf;
    double best_piv = 0.0;
    if (std::isfinite(tmax)) {
      for (int k = 0; k < m_; ++k) {
        if (std::abs(alpha[k]) <= opts_.pivot_tol) continue;
        const double t = limit(k, -dir * alpha[k], 0.0);
        if (t > tmax) continue;
        const double piv = std::abs(alpha[k]);
        const bool take = bland ? (r < 0 || head_[k] < head_[r]) : piv > best_piv;
        if (take) {
          r = k;
          best_piv = piv;
          theta = std::max(t, 0.0);
        }
      }
    }
    const double range = ub_[q] - lb_[q];
    const bool flip = status_[q] != VarStatus::Free && finite(range) && range <= theta;
    if (flip) theta = range;
    if (!std::isfinite(theta)) {
      res.status = Status::Unbounded;
      res.message = "objective unbounded";
      return kDone;
    }
    stall_ = theta <= opts_.primal_tol ? stall_ + 1 : 0;

    // The leaving variable stops at the bound it was moving toward.
    VarStatus leave_at = VarStatus::AtLower;
    if (!flip) {
      const int j = head_[r];
      const bool decreasing = -dir * alpha[r] < 0.0;
      const int inf = phase1 ? infeasibility_sign(j) : 0;
      if (decreasing) leave_at = inf > 0 ? VarStatus::AtUpper : VarStatus::AtLower;
      else leave_at = inf < 0 ? VarStatus::AtLower : VarStatus::AtUpper;
    }

    // Primal update.
    for (int k = 0; k < m_; ++k)
      if (alpha[k] != 0.0) x_[head_[k]] -= dir * theta * alpha[k];
    x_[q] += dir * theta;
    if (flip) {
      status_[q] = status_[q] == VarStatus::AtLower ? VarStatus::AtUpper : VarStatus::AtLower;
      x_[q] = nonbasic_value(q);
      return kContinue;
    }

    const int leaving = head_[r];
    status_[leaving] = leave_at;
    x_[leaving] = nonbasic_value(leaving);
    pos_[leaving] = -1;
    head_[r] = q;
    pos_[q] = r;
    status_[q] = VarStatus::Basic;

    Eta e;
    e.row = r;
    e.pivot = 1.0 / alpha[r];
    for (int k = 0; k < m_; ++k)
      if (k != r && alpha[k] != 0.0) e.others.emplace_back(k, -alpha[k] / alpha[r]);
    etas_.push_back(std::move(e));

    if (static_cast<int>(etas_.size()) >= opts_.refactor_interval)
      if (!refactor()) return kSingular;
    return kContinue;
  }

  Result& fail(Result& res, std::string why) {
    res.status = Status::NumericalFailure;
    res.message = std::move(why);
    return res;
  }

  void finish(Result& res) {
    if (res.status == Status::Optimal || res.status == Status::IterationLimit) {
      if (!etas_.empty() && refactor()) {
        // Recomputed values may drift past a bound by roundoff; re-run if so.
        bool bad = false;
        for (int k = 0; k < m_; ++k) bad = bad || infeasibility_sign(head_[k]) != 0;
        if (bad && res.status == Status::Optimal && res.iterations < opts_.max_iterations) {
          int step;
          while ((step = iterate(res)) == kContinue) {}
          if (step == kSingular) fail(res, "singular basis during cleanup");
        }
      }
    }
    res.x.assign(x_.begin(), x_.begin() + n_);
    res.activity.assign(x_.begin() + n_, x_.end());
    double obj = 0.0;
    for (int j = 0; j < n_; ++j) obj += cost_[j] * x_[j];
    res.objective = obj;
    res.basis.status = status_;
  }

  Options opts_;
  int n_ = 0, m_ = 0;
  Eigen::SparseMatrix<double> a_;
  std::vector<double> lb_, ub_, cost_, x_;
  std::vector<VarStatus> status_;
  std::vector<int> pos_, head_;
  std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>> lu_;
  std::vector<Eta> etas_;
  int stall_ = 0;
};

}  // namespace detail

/// Bounded-variable revised primal simplex (sparse LU + eta file).
class RevisedSimplex final : public Solver {
 public:
  std::string name() const override { return "revised-simplex"; }

  Result solve(const Model& model, const Options& opts = {},
               const Basis* warm = nullptr) override {
    if (model.rows() == 0) return solve_unconstrained(model);
    detail::Simplex s(model, opts);
    Result r = s.run(warm);
    if (model.maximize) r.objective = -r.objective;
    return r;
  }

 private:
  static Result solve_unconstrained(const Model& model) {
    Result r;
    r.status = Status::Optimal;
    r.x.resize(static_cast<std::size_t>(model.cols()));
    for (int j = 0; j < model.cols(); ++j) {
      const double c = model.maximize ? model.cost()[j] : -model.cost()[j];
      const double lo = model.lower()[j], hi = model.upper()[j];
      double v = c > 0.0 ? hi : c < 0.0 ? lo : (std::isfinite(lo) ? lo : std::isfinite(hi) ? hi : 0.0);
      if (!std::isfinite(v)) {
        r.status = Status::Unbounded;
        r.message = "objective unbounded";
        v = 0.0;
      }
      r.x[j] = v;
      r.objective += model.cost()[j] * v;
    }
    return r;
  }
};

inline std::unique_ptr<Solver> make_solver(const std::string& name = "revised-simplex") {
  if (name == "revised-simplex" || name == "simplex") return std::make_unique<RevisedSimplex>();
  throw UsageError("unknown LP backend '" + name + "'");
}

}  // namespace uamflow::lp
