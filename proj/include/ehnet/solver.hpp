#ifndef EHNET_SOLVER_HPP_
#define EHNET_SOLVER_HPP_

#include <Eigen/Dense>
#include <limits>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace ehnet::solver {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class ConstraintClass {
  affine,
  convex_quadratic,
  quadratic_over_linear,
  reciprocal,
  neg_log_rate,
};

const char* constraint_class_name(ConstraintClass c);

// --- Expression terms -------------------------------------------------------
//
// A smooth convex function is represented as a constant plus a sum of terms.
// Each term is convex on its domain and carries exact gradient and Hessian
// formulas, so nothing in the solver is ever differenced numerically.

// sum_i a_i * x_i
struct AffineTerm {
  std::vector<std::pair<int, double>> coeffs;
};

// 0.5 * coef * (x_i - center)^2, coef >= 0
struct QuadTerm {
  int index = 0;
  double coef = 0.0;
  double center = 0.0;
};

// coef * (a^T x + a0)^2 / (d^T x + d0); coef >= 0, denominator > 0 on domain
struct QuadOverLinTerm {
  std::vector<std::pair<int, double>> num;
  double num0 = 0.0;
  std::vector<std::pair<int, double>> den;
  double den0 = 0.0;
  double coef = 1.0;
};

// coef / (d^T x + d0); coef >= 0, denominator > 0 on domain
struct ReciprocalTerm {
  std::vector<std::pair<int, double>> den;
  double den0 = 0.0;
  double coef = 1.0;
};

// -coef * ln(1 + gain * x_i); coef >= 0, 1 + gain*x > 0 on domain
struct NegLogTerm {
  int index = 0;
  double coef = 0.0;
  double gain = 1.0;
};

using Term = std::variant<AffineTerm, QuadTerm, QuadOverLinTerm, ReciprocalTerm, NegLogTerm>;

class Expression {
 public:
  double constant = 0.0;
  std::vector<Term> terms;

  // Returns +inf outside the domain of any term (nonpositive denominator or
  // log argument); line searches treat that as infeasible.
  double value(const VectorXd& x) const;
  bool domain_ok(const VectorXd& x) const;
  void add_gradient(const VectorXd& x, double scale, VectorXd& grad) const;
  void add_hessian(const VectorXd& x, double scale, MatrixXd& hess) const;
  std::vector<int> support() const;

  Expression& add_affine(std::vector<std::pair<int, double>> coeffs, double offset = 0.0);
  Expression& add_quad(int index, double coef, double center = 0.0);
  Expression& add_quad_over_lin(QuadOverLinTerm t);
  Expression& add_reciprocal(ReciprocalTerm t);
  Expression& add_neg_log(int index, double coef, double gain);
};

// One inequality expr(x) <= 0, tagged by its convexity class.
struct Constraint {
  ConstraintClass tag = ConstraintClass::affine;
  Expression expr;
  std::string name;
};

// Smooth convex program
//
//   maximize   objective(x) = -(cost(x))
//   subject to c_j(x) <= 0,  lower <= x <= upper
//
// `cost` is the negated concave objective, itself a convex Expression. Box
// bounds may be +-inf on either side.
struct ConvexProblem {
  int n = 0;
  Expression cost;
  std::vector<Constraint> constraints;
  VectorXd lower;
  VectorXd upper;

  double objective_value(const VectorXd& x) const { return -cost.value(x); }
};

enum class SolveStatus { converged, max_iter, numerical_failure };
const char* status_name(SolveStatus s);

struct SolverOptions {
  double feas_tol = 1e-9;
  double gap_tol = 1e-7;
  double kkt_tol = 1e-6;
  int max_outer_iter = 50;
  int max_inner_iter = 100;
  double mu = 10.0;              // barrier parameter growth
  double armijo = 0.3;           // line-search acceptance fraction
  double backtrack = 0.8;        // line-search shrink factor
  double ridge0 = 1e-10;         // initial Hessian regularization
  double strict_margin = 1e-12;  // required slack of x0 in every constraint
};

// Lagrange multipliers at the returned point: one per inequality constraint
// plus one per finite box side.
struct Multipliers {
  VectorXd ineq;
  VectorXd box_lo;
  VectorXd box_hi;
};

struct SolverReport {
  SolveStatus status = SolveStatus::numerical_failure;
  int newton_iterations = 0;
  int outer_iterations = 0;
  double duality_measure = kInf;  // m / t_barrier at exit
  double objective = -kInf;       // maximized objective at x_star
  double kkt_residual = kInf;
  std::vector<double> outer_objectives;  // objective after each centering
  Multipliers multipliers;
};

// Feasible-start log-barrier method with damped Newton inner iterations.
// `x0` must satisfy every constraint strictly and lie strictly inside the
// box; otherwise throws std::invalid_argument ("infeasible_start").
std::pair<VectorXd, SolverReport> solve(const ConvexProblem& problem, const VectorXd& x0,
                                        const SolverOptions& opts = {});

// Norm of the stationarity residual plus the complementary-slackness
// residual of (x, multipliers) for `problem`.
double kkt_residual(const ConvexProblem& problem, const VectorXd& x, const Multipliers& mult);

}  // namespace ehnet::solver

#endif  // EHNET_SOLVER_HPP_
