#include "copt/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace copt {

FiniteInstance::FiniteInstance(ActionSpace actions_in, Support support_in,
                               std::vector<Vector> L_in, std::vector<Matrix> C_in,
                               std::vector<std::string> names)
    : actions(std::move(actions_in)),
      support(std::move(support_in)),
      L(std::move(L_in)),
      C(std::move(C_in)),
      constraint_names(std::move(names)) {
  const std::size_t n = support.size();
  const auto k = static_cast<Eigen::Index>(actions.size());
  if (L.size() != n || C.size() != n) {
    throw std::invalid_argument("instance: tables must have one entry per support point");
  }
  double total = 0.0;
  for (double w : support.weights()) total += w;
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("instance: weights must sum to 1 within 1e-12");
  }
  if (PointIndex(support.points()).size() != n) {
    throw std::invalid_argument("instance: duplicate support points");
  }
  num_constraints_ = static_cast<std::size_t>(C.front().rows());
  for (std::size_t i = 0; i < n; ++i) {
    if (L[i].size() != k || !L[i].allFinite()) {
      throw std::invalid_argument("instance: loss row " + std::to_string(i) +
                                  " has the wrong length or a non-finite entry");
    }
    if (C[i].cols() != k ||
        static_cast<std::size_t>(C[i].rows()) != num_constraints_ ||
        !C[i].allFinite()) {
      throw std::invalid_argument("instance: constraint matrix " + std::to_string(i) +
                                  " has the wrong shape or a non-finite entry");
    }
  }
  if (constraint_names.empty()) {
    for (std::size_t j = 0; j < num_constraints_; ++j) {
      constraint_names.push_back("c" + std::to_string(j));
    }
  } else if (constraint_names.size() != num_constraints_) {
    throw std::invalid_argument("instance: wrong number of constraint names");
  }
}

FiniteInstance FiniteInstance::tabulate(const Problem& problem,
                                        const Support& support) {
  std::vector<Vector> l;
  std::vector<Matrix> c;
  for (const auto& x : support.points()) {
    l.push_back(problem.loss(x));
    c.push_back(problem.constraints(x));
  }
  return FiniteInstance(problem.actions, support, std::move(l), std::move(c),
                        problem.constraints.row_names());
}

Problem FiniteInstance::to_problem() const {
  return Problem(actions, LossOracle::table(support.points(), L),
                 ConstraintOracle::table(support.points(), C, constraint_names));
}

namespace {

Vector scores(const FiniteInstance& inst, std::size_t i, const Vector& lambda) {
  if (inst.num_constraints() == 0) return -inst.L[i];
  return -inst.L[i] - inst.C[i].transpose() * lambda;
}

void check_lambda(const FiniteInstance& inst, const Vector& lambda) {
  if (static_cast<std::size_t>(lambda.size()) != inst.num_constraints()) {
    throw std::invalid_argument("instance: lambda has the wrong dimension");
  }
}

}  // namespace

double FiniteInstance::dual_value(const Vector& lambda, Temperature beta) const {
  check_lambda(*this, lambda);
  double f = 0.0;
  for (std::size_t i = 0; i < num_points(); ++i) {
    f += support.weight(i) * lse(scores(*this, i, lambda), beta);
  }
  return f;
}

Vector FiniteInstance::dual_gradient(const Vector& lambda, Temperature beta) const {
  check_lambda(*this, lambda);
  Vector g = Vector::Zero(lambda.size());
  for (std::size_t i = 0; i < num_points(); ++i) {
    g -= support.weight(i) * (C[i] * softmax(scores(*this, i, lambda), beta));
  }
  return g;
}

std::vector<Vector> FiniteInstance::gibbs(const Vector& lambda,
                                          Temperature beta) const {
  check_lambda(*this, lambda);
  std::vector<Vector> pi;
  pi.reserve(num_points());
  for (std::size_t i = 0; i < num_points(); ++i) {
    pi.push_back(softmax(scores(*this, i, lambda), beta));
  }
  return pi;
}

double FiniteInstance::risk(const std::vector<Vector>& pi) const {
  double r = 0.0;
  for (std::size_t i = 0; i < num_points(); ++i) {
    r += support.weight(i) * L[i].dot(pi.at(i));
  }
  return r;
}

Vector FiniteInstance::constraint_values(const std::vector<Vector>& pi) const {
  Vector v = Vector::Zero(static_cast<Eigen::Index>(num_constraints()));
  for (std::size_t i = 0; i < num_points(); ++i) {
    v += support.weight(i) * (C[i] * pi.at(i));
  }
  return v;
}

namespace {

// Standard-form LP  min c^T z  s.t.  A z = b, z >= 0  held as a dense
// tableau. Row 0 .. m-1 are constraints, the last row holds reduced costs
// and the last column the right-hand side.
class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols)
      : m_(rows), n_(cols), t_(Matrix::Zero(rows + 1, cols + 1)), basis_(rows) {}

  double& a(std::size_t r, std::size_t c) { return t_(idx(r), idx(c)); }
  double& rhs(std::size_t r) { return t_(idx(r), idx(n_)); }
  double& cost(std::size_t c) { return t_(idx(m_), idx(c)); }
  double objective() const { return -t_(idx(m_), idx(n_)); }
  std::vector<std::size_t>& basis() { return basis_; }
  std::size_t rows() const { return m_; }

  // Replaces the cost row by c and prices out the current basis.
  void set_costs(const std::vector<double>& c) {
    t_.row(idx(m_)).setZero();
    for (std::size_t j = 0; j < n_; ++j) cost(j) = c[j];
    for (std::size_t r = 0; r < m_; ++r) {
      const double cb = c[basis_[r]];
      if (cb != 0.0) t_.row(idx(m_)) -= cb * t_.row(idx(r));
    }
  }

  void pivot(std::size_t r, std::size_t c) {
    t_.row(idx(r)) /= t_(idx(r), idx(c));
    for (std::size_t i = 0; i <= m_; ++i) {
      if (i == r) continue;
      const double f = t_(idx(i), idx(c));
      if (f != 0.0) t_.row(idx(i)) -= f * t_.row(idx(r));
    }
    basis_[r] = c;
    ++pivots_;
  }

  // Bland's rule over columns allowed by `eligible`. Returns false if the
  // LP is unbounded (cannot happen for bounded feasible sets).
  template <class Eligible>
  bool optimize(Eligible eligible) {
    constexpr double kTol = 1e-11;
    for (;;) {
      std::size_t enter = n_;
      for (std::size_t j = 0; j < n_; ++j) {
        if (eligible(j) && cost(j) < -kTol) {
          enter = j;
          break;
        }
      }
      if (enter == n_) return true;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < m_; ++r) {
        if (a(r, enter) > kTol) best = std::min(best, rhs(r) / a(r, enter));
      }
      std::size_t leave = m_;
      for (std::size_t r = 0; r < m_; ++r) {
        if (a(r, enter) <= kTol || rhs(r) / a(r, enter) > best + kTol) continue;
        if (leave == m_ || basis_[r] < basis_[leave]) leave = r;
      }
      if (leave == m_) return false;
      pivot(leave, enter);
    }
  }

  std::size_t pivots() const { return pivots_; }

 private:
  static Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }
  std::size_t m_;
  std::size_t n_;
  Matrix t_;
  std::vector<std::size_t> basis_;
  std::size_t pivots_ = 0;
};

}  // namespace

OracleSolution solve_lp_exact(const FiniteInstance& instance) {
  const std::size_t n = instance.num_points();
  const std::size_t k = instance.num_actions();
  const std::size_t m = instance.num_constraints();
  if (n * k > 10'000) {
    throw std::invalid_argument("solve_lp_exact: n |A| exceeds 10^4");
  }

  // Columns: pi_{i,a} (n k), constraint slacks (m), artificials (n).
  // Rows: sum_a pi_{i,a} = 1 (n), sum_i w_i C_i pi_i + s = 0 (m).
  const std::size_t slack0 = n * k;
  const std::size_t art0 = slack0 + m;
  const std::size_t cols = art0 + n;
  Tableau tab(n + m, cols);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < k; ++a) tab.a(i, i * k + a) = 1.0;
    tab.a(i, art0 + i) = 1.0;
    tab.rhs(i) = 1.0;
    tab.basis()[i] = art0 + i;
  }
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t r = n + j;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = instance.support.weight(i);
      for (std::size_t a = 0; a < k; ++a) {
        tab.a(r, i * k + a) = w * instance.C[i](static_cast<Eigen::Index>(j),
                                               static_cast<Eigen::Index>(a));
      }
    }
    tab.a(r, slack0 + j) = 1.0;
    tab.basis()[r] = slack0 + j;
  }

  std::vector<double> phase1(cols, 0.0);
  for (std::size_t i = 0; i < n; ++i) phase1[art0 + i] = 1.0;
  tab.set_costs(phase1);
  tab.optimize([](std::size_t) { return true; });

  OracleSolution sol;
  if (tab.objective() > 1e-9) {
    sol.status = OracleStatus::kInfeasible;
    sol.pivots = tab.pivots();
    return sol;
  }
  // Drive zero-level artificials out of the basis where possible.
  for (std::size_t r = 0; r < tab.rows(); ++r) {
    if (tab.basis()[r] < art0) continue;
    for (std::size_t c = 0; c < art0; ++c) {
      if (std::abs(tab.a(r, c)) > 1e-9) {
        tab.pivot(r, c);
        break;
      }
    }
  }

  std::vector<double> phase2(cols, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < k; ++a) {
      phase2[i * k + a] = instance.support.weight(i) * instance.L[i](static_cast<Eigen::Index>(a));
    }
  }
  tab.set_costs(phase2);
  tab.optimize([art0](std::size_t c) { return c < art0; });

  sol.status = OracleStatus::kOptimal;
  sol.lp_value = tab.objective();
  sol.pivots = tab.pivots();
  std::vector<double> z(cols, 0.0);
  for (std::size_t r = 0; r < tab.rows(); ++r) z[tab.basis()[r]] = tab.rhs(r);

  sol.pi_star.assign(n, Vector::Zero(static_cast<Eigen::Index>(k)));
  for (std::size_t i = 0; i < n; ++i) {
    Vector& p = sol.pi_star[i];
    for (std::size_t a = 0; a < k; ++a) {
      p(static_cast<Eigen::Index>(a)) = std::max(0.0, z[i * k + a]);
    }
    p /= p.sum();
  }
  sol.gamma = Vector::Zero(static_cast<Eigen::Index>(m));
  sol.lambda_star = Vector::Zero(static_cast<Eigen::Index>(m));
  for (std::size_t j = 0; j < m; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    sol.gamma(jj) = std::max(0.0, z[slack0 + j]);
    // The slack's reduced cost equals -y_j = lambda_j >= 0 at optimality.
    sol.lambda_star(jj) = std::max(0.0, tab.cost(slack0 + j));
  }
  return sol;
}

namespace {

constexpr int kBisectionSteps = 100;

// Minimizes a convex function of one variable over [lo, hi] given its
// derivative, by bisection on the sign of the derivative.
template <class Deriv>
double bisect_min(Deriv deriv, double lo, double hi) {
  if (deriv(lo) >= 0.0) return lo;
  if (deriv(hi) <= 0.0) return hi;
  for (int s = 0; s < kBisectionSteps && hi - lo > 0.0; ++s) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (deriv(mid) > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

DualGridResult solve_dual_grid(const FiniteInstance& instance, Temperature beta,
                               const DualGridSpec& grid) {
  const std::size_t m = instance.num_constraints();
  if (m == 0 || m > 2) {
    throw std::invalid_argument("solve_dual_grid: needs 1 <= M <= 2");
  }
  if (!(grid.lambda_max > 0.0) || grid.resolution < 1) {
    throw std::invalid_argument("solve_dual_grid: invalid grid");
  }
  const double hmax = grid.lambda_max;
  const double step = hmax / static_cast<double>(grid.resolution);
  const auto f = [&](const Vector& l) { return instance.dual_value(l, beta); };

  Vector best = Vector::Zero(static_cast<Eigen::Index>(m));
  double best_val = f(best);
  const std::size_t per_axis = grid.resolution + 1;
  const std::size_t total = m == 1 ? per_axis : per_axis * per_axis;
  for (std::size_t g = 0; g < total; ++g) {
    Vector l(static_cast<Eigen::Index>(m));
    l(0) = step * static_cast<double>(g % per_axis);
    if (m == 2) l(1) = step * static_cast<double>(g / per_axis);
    const double v = f(l);
    if (v < best_val) {
      best_val = v;
      best = l;
    }
  }

  Vector refined(static_cast<Eigen::Index>(m));
  if (m == 1) {
    const double lo = std::max(0.0, best(0) - step);
    const double hi = std::min(hmax, best(0) + step);
    refined(0) = bisect_min(
        [&](double t) { return instance.dual_gradient(Vector::Constant(1, t), beta)(0); },
        lo, hi);
  } else {
    auto inner = [&](double t1) {
      return bisect_min(
          [&](double t2) {
            return instance.dual_gradient(Vector{{t1, t2}}, beta)(1);
          },
          0.0, hmax);
    };
    // d/dt1 min_t2 F(t1, t2) = dF/dt1 at the inner minimizer.
    const double t1 = bisect_min(
        [&](double t) {
          return instance.dual_gradient(Vector{{t, inner(t)}}, beta)(0);
        },
        0.0, hmax);
    refined = Vector{{t1, inner(t1)}};
  }
  const double refined_val = f(refined);
  if (refined_val <= best_val) {
    best = refined;
    best_val = refined_val;
  }
  const bool boundary = (best.array() >= hmax * (1.0 - 1e-9)).any();
  return {DualVector(best), best_val,
          boundary ? DualGridStatus::kBoundary : DualGridStatus::kOk};
}

namespace {

constexpr double kArgminTol = 1e-9;
constexpr double kCheckTol = 1e-6;

// Weighted mass of pi placed outside argmin_a (L_i + C_i^T lambda)_a.
double mass_outside_argmin(const FiniteInstance& inst, const Vector& lambda,
                           const std::vector<Vector>& pi, bool weighted) {
  double worst = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < inst.num_points(); ++i) {
    const Vector s = -scores(inst, i, lambda);
    const double lo = s.minCoeff();
    double off = 0.0;
    for (Eigen::Index a = 0; a < s.size(); ++a) {
      if (s(a) > lo + kArgminTol) off += pi[i](a);
    }
    worst = std::max(worst, off);
    total += inst.support.weight(i) * off;
  }
  return weighted ? total : worst;
}

}  // namespace

NpReport validate_np_structure(const FiniteInstance& instance,
                               const OracleSolution& solution,
                               const std::vector<double>& betas,
                               const DualGridSpec& grid) {
  NpReport report;
  if (solution.status != OracleStatus::kOptimal) return report;

  report.max_mass_outside_argmin =
      mass_outside_argmin(instance, solution.lambda_star, solution.pi_star, false);
  report.support_ok = report.max_mass_outside_argmin <= kCheckTol;
  for (Eigen::Index j = 0; j < solution.gamma.size(); ++j) {
    report.max_complementary_slackness =
        std::max(report.max_complementary_slackness,
                 solution.gamma(j) * solution.lambda_star(j));
  }
  report.slackness_ok = report.max_complementary_slackness <= kCheckTol;

  report.gaps_ok = true;
  report.feasibility_ok = true;
  const double log_a = std::log(static_cast<double>(instance.num_actions()));
  for (double b : betas) {
    const Temperature beta(b);
    NpBetaCheck check{};
    check.beta = b;
    Vector lambda = Vector::Zero(static_cast<Eigen::Index>(instance.num_constraints()));
    check.grid_status = DualGridStatus::kOk;
    if (instance.num_constraints() > 0) {
      const auto res = solve_dual_grid(instance, beta, grid);
      lambda = res.lambda.values();
      check.grid_status = res.status;
    }
    check.lambda_tilde = lambda;
    const auto pi = instance.gibbs(lambda, beta);
    check.risk = instance.risk(pi);
    check.risk_gap = check.risk - solution.lp_value;
    check.gap_bound = log_a / b;
    check.max_violation = 0.0;
    if (instance.num_constraints() > 0) {
      check.max_violation = std::max(0.0, instance.constraint_values(pi).maxCoeff());
    }
    check.mass_outside_argmin =
        mass_outside_argmin(instance, solution.lambda_star, pi, true);
    report.gaps_ok = report.gaps_ok && check.risk_gap <= check.gap_bound + kCheckTol;
    report.feasibility_ok = report.feasibility_ok && check.max_violation <= kCheckTol;
    report.betas.push_back(std::move(check));
  }
  return report;
}

}  // namespace copt
