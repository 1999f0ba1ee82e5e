#ifndef EHNET_SCA_HPP_
#define EHNET_SCA_HPP_

#include <optional>
#include <string>
#include <vector>

#include "ehnet/config.hpp"
#include "ehnet/frame.hpp"
#include "ehnet/solver.hpp"

namespace ehnet::sca {

enum class Scheme { proposed, equal_power, max_power, equal_time };
Scheme scheme_from_string(const std::string& name);  // throws on unknown id
const char* scheme_name(Scheme s);

// Variable order inside the per-frame convex program: six scalars per node.
enum VarField : int { kPe = 0, kPi = 1, kAlpha = 2, kLambda = 3, kPsi = 4, kAlphaHat = 5 };
inline constexpr int kFieldsPerNode = 6;
inline int var_index(int k, VarField f) { return k * kFieldsPerNode + static_cast<int>(f); }

// Per-frame constants in solver units: powers in W, queue quantities in
// scaled queue units (Mbit), rates in scaled rate units (Mbit/s).
struct FrameProblem {
  int K = 0;
  double tau = 0.0;           // frame duration (s)
  double tau_drift = 0.0;     // frame duration over the drift time unit
  double P_max = 0.0;         // W
  std::vector<double> p_min;  // per-node minimum transmit power (W)
  std::vector<double> p_bar;  // per-node max transmit power (W)
  std::vector<double> g2;     // downlink squared norms
  std::vector<double> eta_g2_over4;       // eta * g2 / 4
  std::vector<double> E_over_tau;         // battery backlog over tau (W)
  std::vector<double> E;                  // battery backlog (J); zero for max-power
  std::vector<double> rate_gain;          // h2 / sigma2 (1/W)
  std::vector<double> rate_coef;          // w_k / (rate_scale * ln 2), scaled rate units
  std::vector<double> need;               // q + a*tau, scaled queue units
  std::vector<double> q_scaled;           // q, scaled queue units
  double alpha_lo = 0.0, alpha_hi = 0.0;
  double psi_floor = 0.0;
  double eta = 0.0;
  double power_scale = 1.0;   // W per internal power unit
  double serve_factor = 0.0;  // scaled-queue units per scaled-rate unit over one frame

  // Rate in scaled units as a function of internal transmit power.
  double rate_scaled(int k, double p_i) const;
  // Queue volume served in one frame: r * (1-alpha) * tau, scaled queue units.
  double served_scaled(int k, double p_i, double alpha) const;
  double lyapunov_scaled() const;  // queue potential in drift units
};

FrameProblem make_frame_problem(const FrameState& frame, const SystemConfig& cfg, Scheme scheme);

// Iterate the surrogate bounds are expanded around.
struct ExpansionPoint {
  std::vector<double> alpha_bar;
  std::vector<double> p_e_bar;
  std::vector<double> psi_bar;
  std::vector<double> alpha_hat_bar;
};

struct ScaResult {
  Allocation allocation;
  SlackState slack;
  std::vector<double> objective_trace;       // penalized objective incl. +L_t, per iterate
  std::vector<double> sum_throughput_trace;  // bit/s at each iterate
  std::vector<double> violation_trace;       // exact-constraint violation at each iterate
  std::vector<solver::SolveStatus> status_trace;  // per solved iterate (trace entry 0 is the initializer)
  int iterations = 0;
  bool converged = false;
  bool used_fallback = false;
  std::vector<solver::SolverReport> reports;
  double final_objective() const { return objective_trace.empty() ? 0.0 : objective_trace.back(); }
};

// --- Surrogate bounds -------------------------------------------------------

// First-order lower bound of 1/x at x_bar: 2/x_bar - x/x_bar^2.
double taylor_inv_lower(double x, double x_bar);

// First-order lower bound of x^2/y at (x_bar, y_bar): 2*x_bar*x/y_bar - (x_bar/y_bar)^2*y.
double taylor_quad_over_lin_lower(double x, double y, double x_bar, double y_bar);

// Convex upper bound of psi*alpha_hat at the expansion point (AM-GM form).
double bilinear_upper(double psi, double alpha_hat, double psi_bar, double alpha_hat_bar);

// Smooth and second-order-cone forms of 1/(1-alpha) <= alpha_hat.
bool time_slack_smooth_holds(double alpha, double alpha_hat);
bool time_slack_soc_holds(double alpha, double alpha_hat);

// --- Constraint builders ----------------------------------------------------

// Transmit power limited by battery-plus-harvest, linearized around the
// expansion point; convex in (p_i, alpha, p_e).
solver::Constraint build_power_coupling_constraint(const FrameProblem& fp, int k,
                                                   const ExpansionPoint& pt);
// Exact relaxed right-hand side it approximates (for tightness checks).
double exact_power_cap(const FrameProblem& fp, int k, double alpha, double p_e);

// Served-volume chain: bilinear upper bound of psi*alpha_hat under the
// concave rate; plus the linear backlog-deficit constraint psi >= need - lambda.
solver::Constraint build_rate_constraint(const FrameProblem& fp, int k, const ExpansionPoint& pt);
solver::Constraint build_backlog_deficit_constraint(const FrameProblem& fp, int k);

// Smooth 1/(1-alpha) - alpha_hat <= 0.
solver::Constraint build_time_slack_constraint(int k);

// Full per-frame convex program over 6K variables (before scheme restriction).
solver::ConvexProblem build_subproblem(const FrameProblem& fp, const ExpansionPoint& pt,
                                       double beta);

// Dimension report used to cross-check the program shape.
struct SubproblemInfo {
  int num_vars = 0;
  int num_linear_or_box_families = 0;  // simplex family + per-node boxes and linear rows
  int num_nonlinear = 0;
};
SubproblemInfo subproblem_info(const FrameProblem& fp);

// --- Scheme restriction -----------------------------------------------------

// Mapping from the full 6K-variable program to the scheme's free variables.
struct Restriction {
  std::vector<int> free_index_of;  // full index -> free index, -1 if fixed
  solver::VectorXd fixed_values;   // full-size; meaningful where fixed
  int n_free = 0;

  solver::VectorXd lift(const solver::VectorXd& x_free) const;
  solver::VectorXd project(const solver::VectorXd& x_full) const;
};

Restriction make_restriction(const FrameProblem& fp, Scheme scheme);

// Rewrites `problem` over the restriction's free variables, folding fixed
// variables into constants and dropping constraints that become constant.
solver::ConvexProblem scheme_restrict(const solver::ConvexProblem& problem,
                                      const Restriction& restriction);

// --- Initialization and the iteration loop ----------------------------------

struct InitialPoint {
  solver::VectorXd x;  // full layout, strictly feasible for the self-anchored subproblem
  ExpansionPoint point;
};

// Feasible initializer; nullopt when the frame admits no feasible start
// (minimum power unreachable), in which case the caller falls back to
// minimum-power transmission.
std::optional<InitialPoint> initial_point(const FrameProblem& fp, const SystemConfig& cfg);

// Inner-approximation loop for one frame: build the surrogate program at the
// current expansion point, solve, clip the transmit power to the exact
// energy cap, update the expansion point, repeat until the objective change
// is below sca_tol. The objective trace is non-decreasing; a failed or
// non-improving solve keeps the last feasible iterate.
ScaResult solve_frame(const FrameState& frame, Scheme scheme, const SystemConfig& cfg,
                      double beta, const std::vector<double>* prev_alpha = nullptr);

// Largest violation of the exact (un-approximated) frame constraints at an
// SI-unit allocation; diagnostic for trace files, in solver units.
double max_exact_violation(const FrameProblem& fp, const Allocation& alloc,
                           const std::vector<double>& lambda);

}  // namespace ehnet::sca

#endif  // EHNET_SCA_HPP_
