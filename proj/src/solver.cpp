#include "ehnet/solver.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace ehnet::solver {

namespace {

double dot_sparse(const std::vector<std::pair<int, double>>& coeffs, const VectorXd& x,
                  double offset) {
  double v = offset;
  for (const auto& [i, a] : coeffs) v += a * x[i];
  return v;
}

}  // namespace

const char* constraint_class_name(ConstraintClass c) {
  switch (c) {
    case ConstraintClass::affine: return "affine";
    case ConstraintClass::convex_quadratic: return "convex-quadratic";
    case ConstraintClass::quadratic_over_linear: return "quadratic-over-linear";
    case ConstraintClass::reciprocal: return "reciprocal";
    case ConstraintClass::neg_log_rate: return "neg-log-rate";
  }
  return "?";
}

const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iter: return "max_iter";
    case SolveStatus::numerical_failure: return "numerical_failure";
  }
  return "?";
}

// --- Expression --------------------------------------------------------------

double Expression::value(const VectorXd& x) const {
  double v = constant;
  for (const auto& term : terms) {
    if (const auto* t = std::get_if<AffineTerm>(&term)) {
      v += dot_sparse(t->coeffs, x, 0.0);
    } else if (const auto* t = std::get_if<QuadTerm>(&term)) {
      double d = x[t->index] - t->center;
      v += 0.5 * t->coef * d * d;
    } else if (const auto* t = std::get_if<QuadOverLinTerm>(&term)) {
      double u = dot_sparse(t->num, x, t->num0);
      double s = dot_sparse(t->den, x, t->den0);
      if (s <= 0.0) return kInf;
      v += t->coef * u * u / s;
    } else if (const auto* t = std::get_if<ReciprocalTerm>(&term)) {
      double s = dot_sparse(t->den, x, t->den0);
      if (s <= 0.0) return kInf;
      v += t->coef / s;
    } else if (const auto* t = std::get_if<NegLogTerm>(&term)) {
      double arg = 1.0 + t->gain * x[t->index];
      if (arg <= 0.0) return kInf;
      v -= t->coef * std::log(arg);
    }
  }
  return v;
}

bool Expression::domain_ok(const VectorXd& x) const {
  for (const auto& term : terms) {
    if (const auto* t = std::get_if<QuadOverLinTerm>(&term)) {
      if (dot_sparse(t->den, x, t->den0) <= 0.0) return false;
    } else if (const auto* t = std::get_if<ReciprocalTerm>(&term)) {
      if (dot_sparse(t->den, x, t->den0) <= 0.0) return false;
    } else if (const auto* t = std::get_if<NegLogTerm>(&term)) {
      if (1.0 + t->gain * x[t->index] <= 0.0) return false;
    }
  }
  return true;
}

void Expression::add_gradient(const VectorXd& x, double scale, VectorXd& grad) const {
  for (const auto& term : terms) {
    if (const auto* t = std::get_if<AffineTerm>(&term)) {
      for (const auto& [i, a] : t->coeffs) grad[i] += scale * a;
    } else if (const auto* t = std::get_if<QuadTerm>(&term)) {
      grad[t->index] += scale * t->coef * (x[t->index] - t->center);
    } else if (const auto* t = std::get_if<QuadOverLinTerm>(&term)) {
      double u = dot_sparse(t->num, x, t->num0);
      double s = dot_sparse(t->den, x, t->den0);
      double cu = scale * t->coef * 2.0 * u / s;
      double cs = -scale * t->coef * u * u / (s * s);
      for (const auto& [i, a] : t->num) grad[i] += cu * a;
      for (const auto& [i, d] : t->den) grad[i] += cs * d;
    } else if (const auto* t = std::get_if<ReciprocalTerm>(&term)) {
      double s = dot_sparse(t->den, x, t->den0);
      double cs = -scale * t->coef / (s * s);
      for (const auto& [i, d] : t->den) grad[i] += cs * d;
    } else if (const auto* t = std::get_if<NegLogTerm>(&term)) {
      double arg = 1.0 + t->gain * x[t->index];
      grad[t->index] -= scale * t->coef * t->gain / arg;
    }
  }
}

void Expression::add_hessian(const VectorXd& x, double scale, MatrixXd& hess) const {
  for (const auto& term : terms) {
    if (std::get_if<AffineTerm>(&term)) {
      continue;
    } else if (const auto* t = std::get_if<QuadTerm>(&term)) {
      hess(t->index, t->index) += scale * t->coef;
    } else if (const auto* t = std::get_if<QuadOverLinTerm>(&term)) {
      // Hessian of u^2/s is (2/s) * w w^T with w = grad(u) - (u/s) grad(s).
      double u = dot_sparse(t->num, x, t->num0);
      double s = dot_sparse(t->den, x, t->den0);
      double ratio = u / s;
      std::vector<std::pair<int, double>> w(t->num.begin(), t->num.end());
      for (const auto& [i, d] : t->den) w.emplace_back(i, -ratio * d);
      double c = scale * t->coef * 2.0 / s;
      for (const auto& [i, wi] : w)
        for (const auto& [j, wj] : w) hess(i, j) += c * wi * wj;
    } else if (const auto* t = std::get_if<ReciprocalTerm>(&term)) {
      double s = dot_sparse(t->den, x, t->den0);
      double c = scale * t->coef * 2.0 / (s * s * s);
      for (const auto& [i, di] : t->den)
        for (const auto& [j, dj] : t->den) hess(i, j) += c * di * dj;
    } else if (const auto* t = std::get_if<NegLogTerm>(&term)) {
      double arg = 1.0 + t->gain * x[t->index];
      hess(t->index, t->index) += scale * t->coef * t->gain * t->gain / (arg * arg);
    }
  }
}

std::vector<int> Expression::support() const {
  std::set<int> s;
  for (const auto& term : terms) {
    if (const auto* t = std::get_if<AffineTerm>(&term)) {
      for (const auto& [i, a] : t->coeffs)
        if (a != 0.0) s.insert(i);
    } else if (const auto* t = std::get_if<QuadTerm>(&term)) {
      if (t->coef != 0.0) s.insert(t->index);
    } else if (const auto* t = std::get_if<QuadOverLinTerm>(&term)) {
      for (const auto& [i, a] : t->num)
        if (a != 0.0) s.insert(i);
      for (const auto& [i, d] : t->den)
        if (d != 0.0) s.insert(i);
    } else if (const auto* t = std::get_if<ReciprocalTerm>(&term)) {
      for (const auto& [i, d] : t->den)
        if (d != 0.0) s.insert(i);
    } else if (const auto* t = std::get_if<NegLogTerm>(&term)) {
      if (t->coef != 0.0) s.insert(t->index);
    }
  }
  return {s.begin(), s.end()};
}

Expression& Expression::add_affine(std::vector<std::pair<int, double>> coeffs, double offset) {
  constant += offset;
  terms.push_back(AffineTerm{std::move(coeffs)});
  return *this;
}
Expression& Expression::add_quad(int index, double coef, double center) {
  terms.push_back(QuadTerm{index, coef, center});
  return *this;
}
Expression& Expression::add_quad_over_lin(QuadOverLinTerm t) {
  terms.push_back(std::move(t));
  return *this;
}
Expression& Expression::add_reciprocal(ReciprocalTerm t) {
  terms.push_back(std::move(t));
  return *this;
}
Expression& Expression::add_neg_log(int index, double coef, double gain) {
  terms.push_back(NegLogTerm{index, coef, gain});
  return *this;
}

// --- Barrier method ----------------------------------------------------------

namespace {

struct BoxSide {
  int index;
  double bound;
  bool is_lower;
};

struct Workspace {
  const ConvexProblem& problem;
  std::vector<BoxSide> box;
  std::vector<std::vector<int>> supports;
  int m;  // total inequality count: constraints + finite box sides

  explicit Workspace(const ConvexProblem& p) : problem(p) {
    for (int i = 0; i < p.n; ++i) {
      if (std::isfinite(p.lower[i])) box.push_back({i, p.lower[i], true});
      if (std::isfinite(p.upper[i])) box.push_back({i, p.upper[i], false});
    }
    m = static_cast<int>(p.constraints.size() + box.size());
    supports.reserve(p.constraints.size());
    for (const auto& c : p.constraints) supports.push_back(c.expr.support());
  }

  bool strictly_feasible(const VectorXd& x, double margin) const {
    if (!problem.cost.domain_ok(x)) return false;
    for (const auto& side : box) {
      double slack = side.is_lower ? x[side.index] - side.bound : side.bound - x[side.index];
      if (slack <= margin) return false;
    }
    for (const auto& c : problem.constraints) {
      double v = c.expr.value(x);
      if (!(v < -margin)) return false;
    }
    return true;
  }

  // Barrier potential phi(x) = -sum log(-c_j) - sum log(box slack); +inf when
  // any slack is nonpositive.
  double phi(const VectorXd& x) const {
    double v = 0.0;
    for (const auto& side : box) {
      double slack = side.is_lower ? x[side.index] - side.bound : side.bound - x[side.index];
      if (slack <= 0.0) return kInf;
      v -= std::log(slack);
    }
    for (const auto& c : problem.constraints) {
      double cv = c.expr.value(x);
      if (cv >= 0.0) return kInf;
      v -= std::log(-cv);
    }
    return v;
  }

  double merit(double t, const VectorXd& x) const {
    double f = problem.cost.value(x);
    if (!std::isfinite(f)) return kInf;
    double p = phi(x);
    if (!std::isfinite(p)) return kInf;
    return t * f + p;
  }

  void gradient_hessian(double t, const VectorXd& x, VectorXd& g, MatrixXd& H) const {
    const int n = problem.n;
    g.setZero(n);
    H.setZero(n, n);
    problem.cost.add_gradient(x, t, g);
    problem.cost.add_hessian(x, t, H);
    for (const auto& side : box) {
      double slack = side.is_lower ? x[side.index] - side.bound : side.bound - x[side.index];
      double sign = side.is_lower ? -1.0 : 1.0;
      g[side.index] += sign / slack;
      H(side.index, side.index) += 1.0 / (slack * slack);
    }
    grad_c_.setZero(n);
    for (size_t ci = 0; ci < problem.constraints.size(); ++ci) {
      const auto& c = problem.constraints[ci];
      const auto& sup = supports[ci];
      double cv = c.expr.value(x);
      double inv = 1.0 / (-cv);
      for (int i : sup) grad_c_[i] = 0.0;
      c.expr.add_gradient(x, 1.0, grad_c_);
      // -log(-c): Hessian = (grad c grad c^T)/c^2 + (1/-c) hess c
      for (int i : sup) {
        g[i] += inv * grad_c_[i];
        for (int j : sup) H(i, j) += inv * inv * grad_c_[i] * grad_c_[j];
      }
      c.expr.add_hessian(x, inv, H);
      for (int i : sup) grad_c_[i] = 0.0;
    }
  }

  mutable VectorXd grad_c_;
};

}  // namespace

std::pair<VectorXd, SolverReport> solve(const ConvexProblem& problem, const VectorXd& x0,
                                        const SolverOptions& opts) {
  if (x0.size() != problem.n) throw std::invalid_argument("solve: x0 dimension mismatch");
  Workspace ws(problem);
  if (!ws.strictly_feasible(x0, opts.strict_margin)) {
    throw std::invalid_argument("infeasible_start: x0 not strictly feasible");
  }

  VectorXd x = x0;
  SolverReport report;
  const int n = problem.n;
  VectorXd g(n), step(n);
  MatrixXd H(n, n);

  // Initial barrier weight: barrier contributes about 1% of the objective
  // magnitude at x0.
  double f0 = problem.cost.value(x0);
  double p0 = ws.phi(x0);
  double t = 1.0;
  if (ws.m > 0) {
    t = std::abs(p0) / (0.01 * std::max(std::abs(f0), 1e-6));
    t = std::clamp(t, 1e-2, 1e8);
  }

  bool failed = false;
  for (int outer = 0; outer < opts.max_outer_iter; ++outer) {
    ++report.outer_iterations;
    // Newton centering at fixed t.
    for (int inner = 0; inner < opts.max_inner_iter; ++inner) {
      ws.gradient_hessian(t, x, g, H);

      double ridge = 0.0;
      bool have_direction = false;
      for (int attempt = 0; attempt < 14; ++attempt) {
        MatrixXd Hr = H;
        if (ridge > 0.0)
          for (int i = 0; i < n; ++i) Hr(i, i) += ridge;
        Eigen::LDLT<MatrixXd> ldlt(Hr);
        if (ldlt.info() == Eigen::Success) {
          step = ldlt.solve(-g);
          if (step.allFinite() && g.dot(step) < 0.0) {
            have_direction = true;
            break;
          }
        }
        ridge = (ridge == 0.0) ? opts.ridge0 : ridge * 10.0;
      }
      if (!have_direction) {
        failed = true;
        break;
      }
      ++report.newton_iterations;

      double decrement2 = -g.dot(step);
      if (decrement2 * 0.5 <= 1e-12) break;

      // Backtracking line search, keeping strict feasibility.
      double merit0 = ws.merit(t, x);
      double slope = g.dot(step);
      double s = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 120; ++ls) {
        VectorXd trial = x + s * step;
        double mv = ws.merit(t, trial);
        if (std::isfinite(mv) && mv <= merit0 + opts.armijo * s * slope) {
          x = std::move(trial);
          accepted = true;
          break;
        }
        s *= opts.backtrack;
        if (s < 1e-16) break;
      }
      if (!accepted) break;  // progress exhausted at this t
    }
    if (failed) break;
    report.outer_objectives.push_back(problem.objective_value(x));

    double gap = ws.m > 0 ? static_cast<double>(ws.m) / t : 0.0;
    if (gap <= opts.gap_tol) break;
    t *= opts.mu;
  }

  // Multipliers from the final barrier parameter.
  report.multipliers.ineq.resize(static_cast<int>(problem.constraints.size()));
  for (size_t j = 0; j < problem.constraints.size(); ++j) {
    double cv = problem.constraints[j].expr.value(x);
    report.multipliers.ineq[static_cast<int>(j)] = 1.0 / (t * std::max(-cv, 1e-300));
  }
  report.multipliers.box_lo = VectorXd::Zero(n);
  report.multipliers.box_hi = VectorXd::Zero(n);
  for (const auto& side : ws.box) {
    double slack = side.is_lower ? x[side.index] - side.bound : side.bound - x[side.index];
    double mult = 1.0 / (t * std::max(slack, 1e-300));
    if (side.is_lower)
      report.multipliers.box_lo[side.index] = mult;
    else
      report.multipliers.box_hi[side.index] = mult;
  }

  report.duality_measure = ws.m > 0 ? static_cast<double>(ws.m) / t : 0.0;
  report.objective = problem.objective_value(x);
  report.kkt_residual = kkt_residual(problem, x, report.multipliers);

  double worst = 0.0;
  for (const auto& c : problem.constraints) worst = std::max(worst, c.expr.value(x));
  if (failed) {
    report.status = SolveStatus::numerical_failure;
  } else if (report.kkt_residual <= opts.kkt_tol && worst <= opts.feas_tol &&
             report.duality_measure <= opts.gap_tol) {
    report.status = SolveStatus::converged;
  } else {
    report.status = SolveStatus::max_iter;
  }
  return {x, report};
}

double kkt_residual(const ConvexProblem& problem, const VectorXd& x, const Multipliers& mult) {
  const int n = problem.n;
  // Stationarity of the maximized objective: grad obj - sum mu_j grad c_j
  // + mu_lo - mu_hi = 0.
  VectorXd r = VectorXd::Zero(n);
  problem.cost.add_gradient(x, -1.0, r);  // grad objective = -grad cost
  double comp = 0.0;
  VectorXd gc(n);
  for (size_t j = 0; j < problem.constraints.size(); ++j) {
    const auto& c = problem.constraints[j];
    double mu = mult.ineq[static_cast<int>(j)];
    gc.setZero();
    c.expr.add_gradient(x, 1.0, gc);
    r -= mu * gc;
    comp += std::abs(mu * c.expr.value(x));
  }
  if (mult.box_lo.size() == n && mult.box_hi.size() == n) {
    for (int i = 0; i < n; ++i) {
      r[i] += mult.box_lo[i];
      r[i] -= mult.box_hi[i];
      if (std::isfinite(problem.lower[i])) comp += std::abs(mult.box_lo[i] * (x[i] - problem.lower[i]));
      if (std::isfinite(problem.upper[i])) comp += std::abs(mult.box_hi[i] * (problem.upper[i] - x[i]));
    }
  }
  return r.norm() + comp;
}

}  // namespace ehnet::solver
