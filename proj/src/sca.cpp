#include "ehnet/sca.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ehnet/phy.hpp"
#include "ehnet/units.hpp"

namespace ehnet::sca {

using solver::ConvexProblem;
using solver::Constraint;
using solver::ConstraintClass;
using solver::Expression;
using solver::kInf;
using solver::QuadOverLinTerm;
using solver::ReciprocalTerm;
using solver::VectorXd;

Scheme scheme_from_string(const std::string& name) {
  if (name == "proposed") return Scheme::proposed;
  if (name == "equal-power") return Scheme::equal_power;
  if (name == "max-power") return Scheme::max_power;
  if (name == "equal-time") return Scheme::equal_time;
  throw std::invalid_argument("unknown scheme: " + name);
}

const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::proposed: return "proposed";
    case Scheme::equal_power: return "equal-power";
    case Scheme::max_power: return "max-power";
    case Scheme::equal_time: return "equal-time";
  }
  return "?";
}

// --- FrameProblem ------------------------------------------------------------

double FrameProblem::rate_scaled(int k, double p_i) const {
  return rate_coef[k] * std::log1p(rate_gain[k] * p_i);
}

double FrameProblem::served_scaled(int k, double p_i, double alpha) const {
  return rate_scaled(k, p_i) * serve_factor * (1.0 - alpha);
}

double FrameProblem::lyapunov_scaled() const {
  double sum = 0.0;
  for (double q : q_scaled) sum += q * q;
  return 0.5 * sum / (tau_drift * tau_drift);
}

FrameProblem make_frame_problem(const FrameState& frame, const SystemConfig& cfg,
                                Scheme scheme) {
  const int K = cfg.K;
  const auto& sc = cfg.scales;
  FrameProblem fp;
  fp.K = K;
  fp.tau = cfg.tau;
  fp.tau_drift = cfg.tau / kDriftTimeUnit;
  fp.P_max = cfg.P_max / sc.power_scale;
  fp.alpha_lo = cfg.alpha_lo;
  fp.alpha_hi = cfg.alpha_hi;
  fp.psi_floor = cfg.psi_floor;
  fp.eta = cfg.eta;
  fp.power_scale = sc.power_scale;
  fp.serve_factor = cfg.tau * sc.rate_scale / sc.queue_scale;
  fp.p_min.resize(K);
  fp.p_bar.assign(K, cfg.P_bar_k / sc.power_scale);
  fp.g2 = frame.g_norm2;
  fp.eta_g2_over4.resize(K);
  fp.E_over_tau.resize(K);
  fp.E.resize(K);
  fp.rate_gain.resize(K);
  fp.rate_coef.resize(K);
  fp.need.resize(K);
  fp.q_scaled.resize(K);
  for (int k = 0; k < K; ++k) {
    fp.p_min[k] = phy::min_power(cfg.gamma_min, cfg.sigma2, frame.h_norm2[k]) / sc.power_scale;
    fp.eta_g2_over4[k] = cfg.eta * frame.g_norm2[k] / 4.0;
    // Max-power spends only the fresh harvest: the battery is invisible to
    // the power coupling and to the post-solve clip.
    double E = (scheme == Scheme::max_power) ? 0.0 : frame.E[k];
    fp.E[k] = E;
    fp.E_over_tau[k] = E / (cfg.tau * sc.power_scale);
    fp.rate_gain[k] = frame.h_norm2[k] / cfg.sigma2 * sc.power_scale;
    fp.rate_coef[k] = cfg.w_k / (sc.rate_scale * std::numbers::ln2);
    fp.q_scaled[k] = frame.q[k] / sc.queue_scale;
    fp.need[k] = (frame.q[k] + frame.a[k] * cfg.tau) / sc.queue_scale;
  }
  return fp;
}

double exact_power_cap(const FrameProblem& fp, int k, double alpha, double p_e) {
  double s = 1.0 - alpha;
  return fp.E_over_tau[k] / s + 4.0 * fp.eta_g2_over4[k] * alpha * p_e / s;
}

// --- Surrogate bounds --------------------------------------------------------

double taylor_inv_lower(double x, double x_bar) {
  if (x <= 0.0 || x_bar <= 0.0) throw std::invalid_argument("taylor_inv_lower: inputs must be > 0");
  return 2.0 / x_bar - x / (x_bar * x_bar);
}

double taylor_quad_over_lin_lower(double x, double y, double x_bar, double y_bar) {
  if (x <= 0.0 || y <= 0.0 || x_bar <= 0.0 || y_bar <= 0.0) {
    throw std::invalid_argument("taylor_quad_over_lin_lower: inputs must be > 0");
  }
  return 2.0 * x_bar * x / y_bar - (x_bar * x_bar) / (y_bar * y_bar) * y;
}

double bilinear_upper(double psi, double alpha_hat, double psi_bar, double alpha_hat_bar) {
  if (psi <= 0.0 || alpha_hat <= 0.0 || psi_bar <= 0.0 || alpha_hat_bar <= 0.0) {
    throw std::invalid_argument("bilinear_upper: inputs must be > 0");
  }
  return 0.5 * (psi_bar / alpha_hat_bar) * alpha_hat * alpha_hat +
         0.5 * (alpha_hat_bar / psi_bar) * psi * psi;
}

bool time_slack_smooth_holds(double alpha, double alpha_hat) {
  return alpha < 1.0 && 1.0 / (1.0 - alpha) <= alpha_hat;
}

bool time_slack_soc_holds(double alpha, double alpha_hat) {
  double a = (alpha_hat - 1.0 + alpha) / 2.0;
  double b = (alpha_hat + 1.0 - alpha) / 2.0;
  return std::hypot(1.0, a) <= b;
}

// --- Constraint builders -----------------------------------------------------

Constraint build_power_coupling_constraint(const FrameProblem& fp, int k,
                                           const ExpansionPoint& pt) {
  const double A = fp.E_over_tau[k];
  const double B = fp.eta_g2_over4[k];
  const double ab = pt.alpha_bar[k];
  const double pb = pt.p_e_bar[k];
  const double sb = 1.0 - ab;
  const double D = 2.0 * (ab + pb) / sb;
  const double F = (ab + pb) * (ab + pb) / (sb * sb);

  const int ip_e = var_index(k, kPe);
  const int ip_i = var_index(k, kPi);
  const int ia = var_index(k, kAlpha);

  Constraint c;
  c.tag = ConstraintClass::quadratic_over_linear;
  c.name = "power_coupling[" + std::to_string(k) + "]";
  // p_i + B*(alpha - p_e)^2/(1-alpha)
  //   - A*[2/sb - (1-alpha)/sb^2] - B*[D*(alpha + p_e) - F*(1-alpha)] <= 0
  c.expr.add_quad_over_lin(QuadOverLinTerm{
      {{ia, 1.0}, {ip_e, -1.0}}, 0.0, {{ia, -1.0}}, 1.0, B});
  c.expr.add_affine(
      {{ip_i, 1.0},
       {ia, -A / (sb * sb) - B * (D + F)},
       {ip_e, -B * D}},
      -2.0 * A / sb + A / (sb * sb) + B * F);
  return c;
}

Constraint build_rate_constraint(const FrameProblem& fp, int k, const ExpansionPoint& pt) {
  const double psi_bar = pt.psi_bar[k];
  const double ah_bar = pt.alpha_hat_bar[k];
  // Full-frame served volume in scaled queue units.
  const double serve_coef = fp.rate_coef[k] * fp.serve_factor;

  Constraint c;
  c.tag = ConstraintClass::neg_log_rate;
  c.name = "rate[" + std::to_string(k) + "]";
  c.expr.add_quad(var_index(k, kAlphaHat), psi_bar / ah_bar);
  c.expr.add_quad(var_index(k, kPsi), ah_bar / psi_bar);
  c.expr.add_neg_log(var_index(k, kPi), serve_coef, fp.rate_gain[k]);
  return c;
}

Constraint build_backlog_deficit_constraint(const FrameProblem& fp, int k) {
  Constraint c;
  c.tag = ConstraintClass::affine;
  c.name = "backlog_deficit[" + std::to_string(k) + "]";
  // need - lambda - psi <= 0
  c.expr.add_affine({{var_index(k, kLambda), -1.0}, {var_index(k, kPsi), -1.0}}, fp.need[k]);
  return c;
}

Constraint build_time_slack_constraint(int k) {
  Constraint c;
  c.tag = ConstraintClass::reciprocal;
  c.name = "time_slack[" + std::to_string(k) + "]";
  // 1/(1-alpha) - alpha_hat <= 0
  c.expr.add_reciprocal(ReciprocalTerm{{{var_index(k, kAlpha), -1.0}}, 1.0, 1.0});
  c.expr.add_affine({{var_index(k, kAlphaHat), -1.0}});
  return c;
}

ConvexProblem build_subproblem(const FrameProblem& fp, const ExpansionPoint& pt, double beta) {
  const int K = fp.K;
  ConvexProblem prob;
  prob.n = K * kFieldsPerNode;
  prob.lower = VectorXd::Constant(prob.n, -kInf);
  prob.upper = VectorXd::Constant(prob.n, kInf);

  const double drift_coef = 1.0 / (fp.tau_drift * fp.tau_drift);
  for (int k = 0; k < K; ++k) {
    // cost = drift - beta * utility (minimized)
    prob.cost.add_quad(var_index(k, kLambda), drift_coef);
    prob.cost.add_neg_log(var_index(k, kPi), beta * fp.rate_coef[k], fp.rate_gain[k]);

    prob.lower[var_index(k, kPe)] = 0.0;
    prob.lower[var_index(k, kPi)] = fp.p_min[k];
    prob.upper[var_index(k, kPi)] = fp.p_bar[k];
    prob.lower[var_index(k, kAlpha)] = fp.alpha_lo;
    prob.upper[var_index(k, kAlpha)] = fp.alpha_hi;
    prob.lower[var_index(k, kLambda)] = 0.0;
    prob.lower[var_index(k, kPsi)] = fp.psi_floor;

    prob.constraints.push_back(build_power_coupling_constraint(fp, k, pt));
    prob.constraints.push_back(build_rate_constraint(fp, k, pt));
    prob.constraints.push_back(build_time_slack_constraint(k));
    prob.constraints.push_back(build_backlog_deficit_constraint(fp, k));
  }

  Constraint budget;
  budget.tag = ConstraintClass::affine;
  budget.name = "beacon_budget";
  std::vector<std::pair<int, double>> coeffs;
  for (int k = 0; k < K; ++k) coeffs.emplace_back(var_index(k, kPe), 1.0);
  budget.expr.add_affine(std::move(coeffs), -fp.P_max);
  prob.constraints.push_back(std::move(budget));
  return prob;
}

SubproblemInfo subproblem_info(const FrameProblem& fp) {
  ExpansionPoint pt;
  pt.alpha_bar.assign(fp.K, 0.5);
  pt.p_e_bar.assign(fp.K, fp.P_max / fp.K);
  pt.psi_bar.assign(fp.K, fp.psi_floor);
  pt.alpha_hat_bar.assign(fp.K, 2.0);
  ConvexProblem prob = build_subproblem(fp, pt, 1.0);

  SubproblemInfo info;
  info.num_vars = prob.n;
  int affine_rows = 0;
  for (const auto& c : prob.constraints) {
    if (c.tag == ConstraintClass::affine)
      ++affine_rows;
    else
      ++info.num_nonlinear;
  }
  // Box families, one per bounded variable; the beacon-power nonnegativity
  // belongs to the budget (simplex) family.
  int box_families = 0;
  for (int k = 0; k < fp.K; ++k) {
    for (VarField f : {kPi, kAlpha, kLambda, kPsi, kAlphaHat}) {
      int i = var_index(k, f);
      if (std::isfinite(prob.lower[i]) || std::isfinite(prob.upper[i])) ++box_families;
    }
  }
  info.num_linear_or_box_families = affine_rows + box_families;
  return info;
}

// --- Scheme restriction ------------------------------------------------------

VectorXd Restriction::lift(const VectorXd& x_free) const {
  VectorXd x = fixed_values;
  for (size_t i = 0; i < free_index_of.size(); ++i) {
    if (free_index_of[i] >= 0) x[static_cast<int>(i)] = x_free[free_index_of[i]];
  }
  return x;
}

VectorXd Restriction::project(const VectorXd& x_full) const {
  VectorXd x(n_free);
  for (size_t i = 0; i < free_index_of.size(); ++i) {
    if (free_index_of[i] >= 0) x[free_index_of[i]] = x_full[static_cast<int>(i)];
  }
  return x;
}

Restriction make_restriction(const FrameProblem& fp, Scheme scheme) {
  const int n = fp.K * kFieldsPerNode;
  Restriction r;
  r.free_index_of.assign(n, -1);
  r.fixed_values = VectorXd::Zero(n);
  std::vector<bool> fixed(n, false);

  if (scheme == Scheme::equal_power) {
    for (int k = 0; k < fp.K; ++k) {
      int i = var_index(k, kPe);
      fixed[i] = true;
      r.fixed_values[i] = fp.P_max / fp.K;
    }
  } else if (scheme == Scheme::equal_time) {
    for (int k = 0; k < fp.K; ++k) {
      int ia = var_index(k, kAlpha);
      int ih = var_index(k, kAlphaHat);
      fixed[ia] = true;
      r.fixed_values[ia] = 0.5;
      fixed[ih] = true;
      r.fixed_values[ih] = 2.0;
    }
  }
  // proposed and max-power keep every variable free; max-power differs only
  // through the zeroed battery in the FrameProblem.

  int next = 0;
  for (int i = 0; i < n; ++i) {
    if (!fixed[i]) r.free_index_of[i] = next++;
  }
  r.n_free = next;
  return r;
}

namespace {

// Folds fixed variables of `e` into constants and reindexes the rest.
Expression restrict_expression(const Expression& e, const Restriction& r) {
  auto remap = [&r](const std::vector<std::pair<int, double>>& coeffs, double& offset) {
    std::vector<std::pair<int, double>> out;
    for (const auto& [i, a] : coeffs) {
      int ni = r.free_index_of[i];
      if (ni >= 0)
        out.emplace_back(ni, a);
      else
        offset += a * r.fixed_values[i];
    }
    return out;
  };

  Expression out;
  out.constant = e.constant;
  for (const auto& term : e.terms) {
    if (const auto* t = std::get_if<solver::AffineTerm>(&term)) {
      double offset = 0.0;
      auto coeffs = remap(t->coeffs, offset);
      out.constant += offset;
      if (!coeffs.empty()) out.terms.push_back(solver::AffineTerm{std::move(coeffs)});
    } else if (const auto* t = std::get_if<solver::QuadTerm>(&term)) {
      int ni = r.free_index_of[t->index];
      if (ni >= 0) {
        out.add_quad(ni, t->coef, t->center);
      } else {
        double d = r.fixed_values[t->index] - t->center;
        out.constant += 0.5 * t->coef * d * d;
      }
    } else if (const auto* t = std::get_if<QuadOverLinTerm>(&term)) {
      QuadOverLinTerm nt;
      nt.coef = t->coef;
      nt.num0 = t->num0;
      nt.den0 = t->den0;
      nt.num = remap(t->num, nt.num0);
      nt.den = remap(t->den, nt.den0);
      if (nt.num.empty() && nt.den.empty()) {
        if (nt.den0 <= 0.0) throw std::logic_error("restriction collapsed denominator");
        out.constant += nt.coef * nt.num0 * nt.num0 / nt.den0;
      } else {
        out.terms.push_back(std::move(nt));
      }
    } else if (const auto* t = std::get_if<ReciprocalTerm>(&term)) {
      ReciprocalTerm nt;
      nt.coef = t->coef;
      nt.den0 = t->den0;
      nt.den = remap(t->den, nt.den0);
      if (nt.den.empty()) {
        if (nt.den0 <= 0.0) throw std::logic_error("restriction collapsed denominator");
        out.constant += nt.coef / nt.den0;
      } else {
        out.terms.push_back(std::move(nt));
      }
    } else if (const auto* t = std::get_if<solver::NegLogTerm>(&term)) {
      int ni = r.free_index_of[t->index];
      if (ni >= 0) {
        out.add_neg_log(ni, t->coef, t->gain);
      } else {
        out.constant -= t->coef * std::log(1.0 + t->gain * r.fixed_values[t->index]);
      }
    }
  }
  return out;
}

}  // namespace

ConvexProblem scheme_restrict(const ConvexProblem& problem, const Restriction& restriction) {
  ConvexProblem out;
  out.n = restriction.n_free;
  out.cost = restrict_expression(problem.cost, restriction);
  out.lower = VectorXd::Constant(out.n, -kInf);
  out.upper = VectorXd::Constant(out.n, kInf);
  for (size_t i = 0; i < restriction.free_index_of.size(); ++i) {
    int ni = restriction.free_index_of[i];
    if (ni >= 0) {
      out.lower[ni] = problem.lower[static_cast<int>(i)];
      out.upper[ni] = problem.upper[static_cast<int>(i)];
    }
  }
  VectorXd probe = VectorXd::Zero(out.n);
  for (const auto& c : problem.constraints) {
    Constraint nc{c.tag, restrict_expression(c.expr, restriction), c.name};
    if (nc.expr.support().empty()) {
      // Constant constraint; must hold at the fixed values, then vanishes.
      double v = nc.expr.value(probe);
      if (v > 1e-9) {
        throw std::logic_error("scheme fixes violate constraint " + c.name);
      }
      continue;
    }
    out.constraints.push_back(std::move(nc));
  }
  return out;
}

// --- Initialization ----------------------------------------------------------

namespace {

struct StrictCheck {
  bool ok = true;
  std::string why;
};

StrictCheck strictly_feasible(const ConvexProblem& prob, const VectorXd& x, double margin) {
  StrictCheck res;
  for (int i = 0; i < prob.n; ++i) {
    if (x[i] <= prob.lower[i] || x[i] >= prob.upper[i]) {
      res.ok = false;
      res.why = "box " + std::to_string(i);
      return res;
    }
  }
  for (const auto& c : prob.constraints) {
    if (!(c.expr.value(x) < -margin)) {
      res.ok = false;
      res.why = c.name;
      return res;
    }
  }
  return res;
}

std::optional<InitialPoint> initial_point_impl(const FrameProblem& fp, const SystemConfig& cfg,
                                               const Restriction& restriction) {
  const int K = fp.K;
  const double m = cfg.strict_margin;
  VectorXd x = VectorXd::Zero(K * kFieldsPerNode);

  for (int k = 0; k < K; ++k) {
    int ipe = var_index(k, kPe);
    double alpha0 = std::clamp(0.5, fp.alpha_lo + m, fp.alpha_hi - m);
    double p_e0 = (fp.P_max / K) * (1.0 - m);
    x[var_index(k, kAlpha)] = alpha0;
    x[ipe] = p_e0;
  }
  // Fixed coordinates override the defaults before the power chain runs.
  for (size_t i = 0; i < restriction.free_index_of.size(); ++i) {
    if (restriction.free_index_of[i] < 0) x[static_cast<int>(i)] = restriction.fixed_values[i];
  }

  for (int k = 0; k < K; ++k) {
    double alpha0 = x[var_index(k, kAlpha)];
    double p_e0 = x[var_index(k, kPe)];
    if (fp.p_min[k] >= fp.p_bar[k]) return std::nullopt;
    double cap = std::min(exact_power_cap(fp, k, alpha0, p_e0), fp.p_bar[k]);
    double p_i0 = cap * (1.0 - m);
    if (p_i0 <= fp.p_min[k]) {
      p_i0 = 0.5 * (fp.p_min[k] + cap);
      if (p_i0 <= fp.p_min[k] * (1.0 + 1e-12) || p_i0 >= cap) return std::nullopt;
    }
    x[var_index(k, kPi)] = p_i0;
    double need = fp.need[k];
    x[var_index(k, kLambda)] = need + std::max(1e-6, m * need);
    x[var_index(k, kPsi)] = fp.psi_floor * (1.0 + m);
    int ih = var_index(k, kAlphaHat);
    if (restriction.free_index_of[ih] >= 0) x[ih] = 1.0 / (1.0 - alpha0) + m;
  }

  InitialPoint init;
  init.x = x;
  init.point.alpha_bar.resize(K);
  init.point.p_e_bar.resize(K);
  init.point.psi_bar.resize(K);
  init.point.alpha_hat_bar.resize(K);
  for (int k = 0; k < K; ++k) {
    init.point.alpha_bar[k] = x[var_index(k, kAlpha)];
    init.point.p_e_bar[k] = x[var_index(k, kPe)];
    init.point.psi_bar[k] = x[var_index(k, kPsi)];
    init.point.alpha_hat_bar[k] = x[var_index(k, kAlphaHat)];
  }

  // Certify by evaluation: the point must sit strictly inside the surrogate
  // program anchored at itself.
  ConvexProblem prob = scheme_restrict(build_subproblem(fp, init.point, 1.0), restriction);
  if (!strictly_feasible(prob, restriction.project(x), 1e-12).ok) return std::nullopt;
  return init;
}

}  // namespace

std::optional<InitialPoint> initial_point(const FrameProblem& fp, const SystemConfig& cfg) {
  Restriction identity = make_restriction(fp, Scheme::proposed);
  return initial_point_impl(fp, cfg, identity);
}

// --- Iteration loop ----------------------------------------------------------

namespace {

double penalized_objective(const FrameProblem& fp, double beta,
                           const std::vector<double>& p_i_internal,
                           const std::vector<double>& lambda) {
  double utility = 0.0;
  for (int k = 0; k < fp.K; ++k) utility += fp.rate_scaled(k, p_i_internal[k]);
  double drift = 0.0;
  for (double l : lambda) drift += l * l;
  drift = 0.5 * drift / (fp.tau_drift * fp.tau_drift);
  return beta * utility - drift + fp.lyapunov_scaled();
}

double sum_throughput_si(const FrameProblem& fp, const SystemConfig& cfg,
                         const std::vector<double>& p_i_internal) {
  double sum = 0.0;
  for (int k = 0; k < fp.K; ++k) sum += fp.rate_scaled(k, p_i_internal[k]);
  return sum * cfg.scales.rate_scale;
}

Allocation allocation_from(const FrameProblem& fp, const SystemConfig& cfg, const VectorXd& x) {
  Allocation a;
  a.p_e.resize(fp.K);
  a.p_i.resize(fp.K);
  a.alpha.resize(fp.K);
  for (int k = 0; k < fp.K; ++k) {
    a.p_e[k] = x[var_index(k, kPe)] * cfg.scales.power_scale;
    a.p_i[k] = x[var_index(k, kPi)] * cfg.scales.power_scale;
    a.alpha[k] = x[var_index(k, kAlpha)];
  }
  return a;
}

ScaResult fallback_result(const FrameProblem& fp, const SystemConfig& cfg, double beta,
                          const std::vector<double>* prev_alpha) {
  ScaResult res;
  res.used_fallback = true;
  res.converged = false;
  res.iterations = 0;
  const int K = fp.K;
  res.allocation.p_e.assign(K, fp.P_max / K * cfg.scales.power_scale);
  res.allocation.p_i.resize(K);
  res.allocation.alpha.resize(K);
  res.slack.lambda.resize(K);
  res.slack.psi.assign(K, fp.psi_floor);
  res.slack.alpha_hat.resize(K);
  std::vector<double> p_i_internal(K);
  for (int k = 0; k < K; ++k) {
    double alpha = prev_alpha ? std::clamp((*prev_alpha)[k], fp.alpha_lo, fp.alpha_hi) : 0.5;
    res.allocation.alpha[k] = alpha;
    res.slack.alpha_hat[k] = 1.0 / (1.0 - alpha);
    double cap = std::min(exact_power_cap(fp, k, alpha, fp.P_max / K), fp.p_bar[k]);
    p_i_internal[k] = cap;
    res.allocation.p_i[k] = cap * cfg.scales.power_scale;
    res.slack.lambda[k] = std::max(0.0, fp.need[k] - fp.served_scaled(k, cap, alpha));
  }
  res.objective_trace.push_back(penalized_objective(fp, beta, p_i_internal, res.slack.lambda));
  res.sum_throughput_trace.push_back(sum_throughput_si(fp, cfg, p_i_internal));
  res.violation_trace.push_back(max_exact_violation(fp, res.allocation, res.slack.lambda));
  return res;
}

}  // namespace

ScaResult solve_frame(const FrameState& frame, Scheme scheme, const SystemConfig& cfg,
                      double beta, const std::vector<double>* prev_alpha) {
  FrameProblem fp = make_frame_problem(frame, cfg, scheme);
  Restriction restriction = make_restriction(fp, scheme);

  auto init = initial_point_impl(fp, cfg, restriction);
  if (!init) return fallback_result(fp, cfg, beta, prev_alpha);

  solver::SolverOptions opts;
  opts.feas_tol = cfg.feas_tol;
  opts.gap_tol = cfg.gap_tol;
  opts.kkt_tol = cfg.kkt_tol;
  opts.max_outer_iter = cfg.max_outer_iter;
  opts.max_inner_iter = cfg.max_inner_iter;

  ScaResult res;
  VectorXd x = init->x;
  ExpansionPoint pt = init->point;

  auto extract = [&](const VectorXd& xfull) {
    Allocation alloc = allocation_from(fp, cfg, xfull);
    std::vector<double> p_i_internal(fp.K);
    for (int k = 0; k < fp.K; ++k) {
      double cap = std::min(exact_power_cap(fp, k, xfull[var_index(k, kAlpha)],
                                            xfull[var_index(k, kPe)]),
                            fp.p_bar[k]);
      p_i_internal[k] = cap;  // spend everything available, capped by hardware
      alloc.p_i[k] = cap * cfg.scales.power_scale;
    }
    return std::make_pair(alloc, p_i_internal);
  };

  // Iterate 0: the feasible initializer, reported pre-clip.
  {
    std::vector<double> p0(fp.K), l0(fp.K);
    for (int k = 0; k < fp.K; ++k) {
      p0[k] = x[var_index(k, kPi)];
      l0[k] = x[var_index(k, kLambda)];
    }
    res.allocation = allocation_from(fp, cfg, x);
    res.slack.lambda = l0;
    res.slack.psi.resize(fp.K);
    res.slack.alpha_hat.resize(fp.K);
    for (int k = 0; k < fp.K; ++k) {
      res.slack.psi[k] = x[var_index(k, kPsi)];
      res.slack.alpha_hat[k] = x[var_index(k, kAlphaHat)];
    }
    res.objective_trace.push_back(penalized_objective(fp, beta, p0, l0));
    res.sum_throughput_trace.push_back(sum_throughput_si(fp, cfg, p0));
    res.violation_trace.push_back(max_exact_violation(fp, res.allocation, l0));
  }

  for (int kappa = 1; kappa <= cfg.max_sca_iter; ++kappa) {
    ConvexProblem sub = scheme_restrict(build_subproblem(fp, pt, beta), restriction);
    VectorXd x0 = restriction.project(x);

    VectorXd xf;
    solver::SolverReport report;
    try {
      std::tie(xf, report) = solver::solve(sub, x0, opts);
    } catch (const std::invalid_argument&) {
      // The warm start drifted onto a surrogate boundary; restart once from
      // the initializer anchored at the current expansion point.
      auto fresh = initial_point_impl(fp, cfg, restriction);
      if (!fresh) break;
      try {
        std::tie(xf, report) = solver::solve(sub, restriction.project(fresh->x), opts);
      } catch (const std::invalid_argument&) {
        break;
      }
    }
    res.reports.push_back(report);
    if (report.status == solver::SolveStatus::numerical_failure) break;

    VectorXd xfull = restriction.lift(xf);
    auto [alloc, p_i_internal] = extract(xfull);
    std::vector<double> lambda(fp.K), psi(fp.K), alpha_hat(fp.K);
    for (int k = 0; k < fp.K; ++k) {
      lambda[k] = xfull[var_index(k, kLambda)];
      psi[k] = xfull[var_index(k, kPsi)];
      alpha_hat[k] = xfull[var_index(k, kAlphaHat)];
    }

    double objective = penalized_objective(fp, beta, p_i_internal, lambda);
    double prev = res.objective_trace.back();
    if (objective < prev) {
      // Inexact solve produced no improvement; keep the last iterate.
      res.converged = true;
      break;
    }

    res.allocation = alloc;
    res.slack.lambda = lambda;
    res.slack.psi = psi;
    res.slack.alpha_hat = alpha_hat;
    res.objective_trace.push_back(objective);
    res.sum_throughput_trace.push_back(sum_throughput_si(fp, cfg, p_i_internal));
    res.violation_trace.push_back(max_exact_violation(fp, alloc, lambda));
    res.status_trace.push_back(report.status);
    res.iterations = kappa;

    pt.alpha_bar = alloc.alpha;
    for (int k = 0; k < fp.K; ++k) pt.p_e_bar[k] = xfull[var_index(k, kPe)];
    pt.psi_bar = psi;
    pt.alpha_hat_bar = alpha_hat;
    x = xfull;

    if (std::abs(objective - prev) <= cfg.sca_tol * std::max(1.0, std::abs(objective))) {
      res.converged = true;
      break;
    }
  }
  return res;
}

double max_exact_violation(const FrameProblem& fp, const Allocation& alloc,
                           const std::vector<double>& lambda) {
  double worst = 0.0;
  double sum_pe = 0.0;
  for (int k = 0; k < fp.K; ++k) {
    double p_e = alloc.p_e[k] / fp.power_scale;
    double p_i = alloc.p_i[k] / fp.power_scale;
    double alpha = alloc.alpha[k];
    sum_pe += p_e;
    worst = std::max(worst, fp.p_min[k] - p_i);
    worst = std::max(worst, p_i - fp.p_bar[k]);
    worst = std::max(worst, fp.alpha_lo - alpha);
    worst = std::max(worst, alpha - fp.alpha_hi);
    worst = std::max(worst, p_i - std::min(exact_power_cap(fp, k, alpha, p_e), fp.p_bar[k]));
    worst = std::max(worst, (fp.need[k] - lambda[k]) - fp.served_scaled(k, p_i, alpha));
    worst = std::max(worst, -lambda[k]);
  }
  worst = std::max(worst, sum_pe - fp.P_max);
  return worst;
}

}  // namespace ehnet::sca
