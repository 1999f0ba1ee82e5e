#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ehnet/phy.hpp"
#include "ehnet/rng.hpp"
#include "ehnet/sca.hpp"
#include "ehnet/stochastic.hpp"
#include "ehnet/units.hpp"

using namespace ehnet;
using sca::ExpansionPoint;
using sca::FrameProblem;
using sca::Scheme;

namespace {

SystemConfig defaults() { return validate_config(SystemConfig{}); }

// Mean-gain frame at 100 m with given backlogs; K nodes.
FrameState mean_frame(const SystemConfig& cfg, double q_bits, double E_j, double a_bps = 5e7) {
  FrameState f;
  f.t = 1;
  f.g_norm2.assign(cfg.K, cfg.M * 1e-6);
  f.h_norm2.assign(cfg.K, cfg.N * 1e-6);
  f.a.assign(cfg.K, a_bps);
  f.q.assign(cfg.K, q_bits);
  f.E.assign(cfg.K, E_j);
  return f;
}

FrameState random_frame(const SystemConfig& cfg, RngStream& rng) {
  Topology topo = place_nodes(cfg, rng);
  RngStream ch(rng.next_u64(), 1);
  auto [g, h] = sample_channels(cfg, topo, ch);
  auto a = draw_arrivals(cfg, ch);
  FrameState f;
  f.t = 1;
  f.g_norm2 = g;
  f.h_norm2 = h;
  f.a = a;
  f.q.resize(cfg.K);
  f.E.resize(cfg.K);
  for (int k = 0; k < cfg.K; ++k) {
    f.q[k] = 5e5 * ch.uniform01();
    f.E[k] = 1e-3 * ch.uniform01();
  }
  return f;
}

}  // namespace

TEST_CASE("taylor bound of 1/x") {
  CHECK(sca::taylor_inv_lower(2.0, 2.0) == doctest::Approx(0.5));
  CHECK(sca::taylor_inv_lower(1.0, 2.0) == doctest::Approx(0.75));
  CHECK(sca::taylor_inv_lower(4.0, 2.0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(sca::taylor_inv_lower(-1.0, 2.0), std::invalid_argument);

  RngStream rng(1, 0);
  for (int i = 0; i < 10000; ++i) {
    double x = 1e-3 + 10.0 * rng.uniform01();
    double xb = 1e-3 + 10.0 * rng.uniform01();
    CHECK(sca::taylor_inv_lower(x, xb) <= 1.0 / x + 1e-10);
    CHECK(sca::taylor_inv_lower(xb, xb) == doctest::Approx(1.0 / xb).epsilon(1e-12));
  }
}

TEST_CASE("taylor bound of x^2/y") {
  CHECK(sca::taylor_quad_over_lin_lower(1, 2, 1, 2) == doctest::Approx(0.5));
  CHECK(sca::taylor_quad_over_lin_lower(2, 2, 1, 2) == doctest::Approx(1.5));
  CHECK(sca::taylor_quad_over_lin_lower(1, 4, 1, 2) == doctest::Approx(0.0));

  RngStream rng(2, 0);
  for (int i = 0; i < 10000; ++i) {
    double x = 1e-3 + 5.0 * rng.uniform01(), y = 1e-3 + 5.0 * rng.uniform01();
    double xb = 1e-3 + 5.0 * rng.uniform01(), yb = 1e-3 + 5.0 * rng.uniform01();
    CHECK(sca::taylor_quad_over_lin_lower(x, y, xb, yb) <= x * x / y + 1e-10);
  }
}

TEST_CASE("bilinear upper bound") {
  CHECK(sca::bilinear_upper(2, 3, 2, 3) == doctest::Approx(6.0));
  CHECK(sca::bilinear_upper(1, 1, 2, 3) == doctest::Approx(1.0 / 3.0 + 0.75));
  CHECK(sca::bilinear_upper(4, 6, 2, 3) == doctest::Approx(24.0));

  RngStream rng(3, 0);
  for (int i = 0; i < 10000; ++i) {
    double p = 1e-3 + 5.0 * rng.uniform01(), a = 1e-3 + 5.0 * rng.uniform01();
    double pb = 1e-3 + 5.0 * rng.uniform01(), ab = 1e-3 + 5.0 * rng.uniform01();
    CHECK(sca::bilinear_upper(p, a, pb, ab) >= p * a - 1e-10);
  }
}

TEST_CASE("time-slack smooth and SOC forms") {
  CHECK(sca::time_slack_smooth_holds(0.5, 2.0));
  CHECK(sca::time_slack_soc_holds(0.5, 2.0));
  // equality case: ||(1, 0.75)|| = 1.25
  CHECK(std::hypot(1.0, 0.75) == doctest::Approx(1.25));
  CHECK(sca::time_slack_smooth_holds(0.5, 3.0));
  CHECK(sca::time_slack_soc_holds(0.5, 3.0));
  CHECK_FALSE(sca::time_slack_smooth_holds(0.5, 1.5));
  CHECK_FALSE(sca::time_slack_soc_holds(0.5, 1.5));
}

TEST_CASE("power coupling surrogate: tight at the anchor, conservative elsewhere") {
  auto cfg = defaults();
  cfg.K = 1;
  cfg = validate_config(cfg);
  auto frame = mean_frame(cfg, 5e4, 2e-4);
  auto fp = sca::make_frame_problem(frame, cfg, Scheme::proposed);

  RngStream rng(4, 0);
  for (int trial = 0; trial < 200; ++trial) {
    ExpansionPoint pt;
    pt.alpha_bar = {0.01 + 0.98 * rng.uniform01()};
    pt.p_e_bar = {20.0 * rng.uniform01()};
    pt.psi_bar = {1e-3};
    pt.alpha_hat_bar = {2.0};
    auto c = sca::build_power_coupling_constraint(fp, 0, pt);

    // At the anchor the surrogate cap equals the exact relaxed cap.
    solver::VectorXd x = solver::VectorXd::Zero(6);
    x[sca::var_index(0, sca::kAlpha)] = pt.alpha_bar[0];
    x[sca::var_index(0, sca::kPe)] = pt.p_e_bar[0];
    double exact = sca::exact_power_cap(fp, 0, pt.alpha_bar[0], pt.p_e_bar[0]);
    x[sca::var_index(0, sca::kPi)] = exact;
    CHECK(c.expr.value(x) == doctest::Approx(0.0).epsilon(1e-10));

    // Anywhere else the surrogate never admits more power than the exact cap.
    for (int i = 0; i < 500; ++i) {
      double alpha = 0.01 + 0.98 * rng.uniform01();
      double p_e = 20.0 * rng.uniform01();
      x[sca::var_index(0, sca::kAlpha)] = alpha;
      x[sca::var_index(0, sca::kPe)] = p_e;
      x[sca::var_index(0, sca::kPi)] = 0.0;
      double surrogate_cap = -c.expr.value(x);
      double cap = sca::exact_power_cap(fp, 0, alpha, p_e);
      CHECK(surrogate_cap <= cap + 1e-10 * std::max(1.0, cap));
    }
  }
}

TEST_CASE("power coupling with empty battery and p_e = alpha collapses to the harvest bound") {
  auto cfg = defaults();
  cfg.K = 1;
  cfg = validate_config(cfg);
  auto frame = mean_frame(cfg, 5e4, 0.0);
  auto fp = sca::make_frame_problem(frame, cfg, Scheme::proposed);

  ExpansionPoint pt;
  pt.alpha_bar = {0.4};
  pt.p_e_bar = {0.4};
  pt.psi_bar = {1e-3};
  pt.alpha_hat_bar = {2.0};
  auto c = sca::build_power_coupling_constraint(fp, 0, pt);

  for (double alpha : {0.2, 0.4, 0.7}) {
    solver::VectorXd x = solver::VectorXd::Zero(6);
    x[sca::var_index(0, sca::kAlpha)] = alpha;
    x[sca::var_index(0, sca::kPe)] = alpha;  // p_e = alpha
    x[sca::var_index(0, sca::kPi)] = 0.0;
    double surrogate_cap = -c.expr.value(x);
    double eta_g2 = 4.0 * fp.eta_g2_over4[0];
    double taylor = sca::taylor_quad_over_lin_lower(2.0 * alpha, 1.0 - alpha, 0.8, 0.6) / 4.0;
    CHECK(surrogate_cap == doctest::Approx(eta_g2 * taylor).epsilon(1e-10));
  }
}

TEST_CASE("rate constraint: anchored equality and chaining") {
  auto cfg = defaults();
  cfg.K = 1;
  cfg = validate_config(cfg);
  auto frame = mean_frame(cfg, 5e4, 1e-3);
  auto fp = sca::make_frame_problem(frame, cfg, Scheme::proposed);

  ExpansionPoint pt;
  pt.alpha_bar = {0.5};
  pt.p_e_bar = {5.0};
  pt.psi_bar = {0.04};
  pt.alpha_hat_bar = {2.5};
  auto c = sca::build_rate_constraint(fp, 0, pt);

  solver::VectorXd x = solver::VectorXd::Zero(6);
  x[sca::var_index(0, sca::kPsi)] = pt.psi_bar[0];
  x[sca::var_index(0, sca::kAlphaHat)] = pt.alpha_hat_bar[0];
  double p_i = 1e-4;
  x[sca::var_index(0, sca::kPi)] = p_i;
  double served_full = fp.rate_scaled(0, p_i) * fp.serve_factor;
  // at the anchor the bilinear surrogate equals psi*alpha_hat exactly
  CHECK(c.expr.value(x) ==
        doctest::Approx(pt.psi_bar[0] * pt.alpha_hat_bar[0] - served_full).epsilon(1e-12));

  // surrogate feasibility implies the exact product constraint
  RngStream rng(5, 0);
  for (int i = 0; i < 2000; ++i) {
    double psi = 1e-3 + 0.2 * rng.uniform01();
    double ah = 1.0 + 5.0 * rng.uniform01();
    double p = 1e-6 + 1e-2 * rng.uniform01();
    x[sca::var_index(0, sca::kPsi)] = psi;
    x[sca::var_index(0, sca::kAlphaHat)] = ah;
    x[sca::var_index(0, sca::kPi)] = p;
    if (c.expr.value(x) <= 0.0) {
      CHECK(psi * ah <= fp.rate_scaled(0, p) * fp.serve_factor + 1e-10);
    }
  }
}

TEST_CASE("subproblem dimensions match the expected counts") {
  auto cfg = defaults();
  auto frame = mean_frame(cfg, 5e4, 1e-4);
  auto fp = sca::make_frame_problem(frame, cfg, Scheme::proposed);
  auto info = sca::subproblem_info(fp);
  CHECK(info.num_vars == 6 * cfg.K);
  CHECK(info.num_linear_or_box_families == 5 * cfg.K + 1);
  CHECK(info.num_nonlinear == 3 * cfg.K);
}

TEST_CASE("initial point follows the clamp chain") {
  auto cfg = defaults();
  cfg.K = 1;
  cfg = validate_config(cfg);

  SUBCASE("empty battery at mean gains is energy limited and feasible") {
    auto frame = mean_frame(cfg, 5e4, 0.0);
    auto fp = sca::make_frame_problem(frame, cfg, Scheme::proposed);
    auto init = sca::initial_point(fp, cfg);
    REQUIRE(init.has_value());
    double p_e0 = (fp.P_max / 1) * (1.0 - cfg.strict_margin);
    double cap = sca::exact_power_cap(fp, 0, 0.5, p_e0);
    double expect = cap * (1.0 - cfg.strict_margin);
    double got = init->x[sca::var_index(0, sca::kPi)];
    CHECK(got == doctest::Approx(expect).epsilon(1e-12));
    CHECK(got >= fp.p_min[0]);
    CHECK(fp.p_min[0] == doctest::Approx(6.25e-10).epsilon(1e-6));
  }

  SUBCASE("large battery caps at hardware power") {
    auto frame = mean_frame(cfg, 5e4, 10.0);
    auto fp = sca::make_frame_problem(frame, cfg, Scheme::proposed);
    auto init = sca::initial_point(fp, cfg);
    REQUIRE(init.has_value());
    CHECK(init->x[sca::var_index(0, sca::kPi)] ==
          doctest::Approx(cfg.P_bar_k * (1.0 - cfg.strict_margin)).epsilon(1e-12));
  }

  SUBCASE("zero backlog and arrivals give a vanishing queue slack") {
    auto frame = mean_frame(cfg, 0.0, 1e-4, 0.0);
    auto fp = sca::make_frame_problem(frame, cfg, Scheme::proposed);
    auto init = sca::initial_point(fp, cfg);
    REQUIRE(init.has_value());
    CHECK(init->x[sca::var_index(0, sca::kLambda)] <= 1e-3);
  }

  SUBCASE("unreachable minimum power reports infeasibility") {
    auto frame = mean_frame(cfg, 5e4, 0.0);
    frame.h_norm2[0] = 1e-12;  // p_min far above any cap
    frame.g_norm2[0] = 1e-12;
    auto fp = sca::make_frame_problem(frame, cfg, Scheme::proposed);
    CHECK_FALSE(sca::initial_point(fp, cfg).has_value());
  }
}

TEST_CASE("scheme restriction") {
  auto cfg = defaults();
  auto frame = mean_frame(cfg, 5e4, 1e-4);

  SUBCASE("equal-power pins the beacon split") {
    auto fp = sca::make_frame_problem(frame, cfg, Scheme::equal_power);
    auto r = sca::make_restriction(fp, Scheme::equal_power);
    CHECK(r.n_free == 5 * cfg.K);
    for (int k = 0; k < cfg.K; ++k) {
      int i = sca::var_index(k, sca::kPe);
      CHECK(r.free_index_of[i] == -1);
      CHECK(r.fixed_values[i] == doctest::Approx(19.9526 / 4.0).epsilon(1e-4));
    }
    ExpansionPoint pt;
    pt.alpha_bar.assign(cfg.K, 0.5);
    pt.p_e_bar.assign(cfg.K, fp.P_max / cfg.K);
    pt.psi_bar.assign(cfg.K, 1e-3);
    pt.alpha_hat_bar.assign(cfg.K, 2.0);
    auto prob = sca::build_subproblem(fp, pt, cfg.beta);
    auto restricted = sca::scheme_restrict(prob, r);
    CHECK(restricted.n == 5 * cfg.K);
    // the beacon budget row vanished
    for (const auto& c : restricted.constraints) CHECK(c.name != "beacon_budget");
  }

  SUBCASE("equal-time removes the time variables") {
    auto fp = sca::make_frame_problem(frame, cfg, Scheme::equal_time);
    auto r = sca::make_restriction(fp, Scheme::equal_time);
    CHECK(r.n_free == 4 * cfg.K);
    for (int k = 0; k < cfg.K; ++k) {
      CHECK(r.free_index_of[sca::var_index(k, sca::kAlpha)] == -1);
      CHECK(r.fixed_values[sca::var_index(k, sca::kAlphaHat)] == doctest::Approx(2.0));
    }
    ExpansionPoint pt;
    pt.alpha_bar.assign(cfg.K, 0.5);
    pt.p_e_bar.assign(cfg.K, fp.P_max / cfg.K);
    pt.psi_bar.assign(cfg.K, 1e-3);
    pt.alpha_hat_bar.assign(cfg.K, 2.0);
    auto restricted = sca::scheme_restrict(sca::build_subproblem(fp, pt, cfg.beta), r);
    for (const auto& c : restricted.constraints) {
      CHECK(c.name.find("time_slack") == std::string::npos);
    }
  }

  SUBCASE("proposed is the identity") {
    auto fp = sca::make_frame_problem(frame, cfg, Scheme::proposed);
    auto r = sca::make_restriction(fp, Scheme::proposed);
    CHECK(r.n_free == 6 * cfg.K);
    ExpansionPoint pt;
    pt.alpha_bar.assign(cfg.K, 0.5);
    pt.p_e_bar.assign(cfg.K, fp.P_max / cfg.K);
    pt.psi_bar.assign(cfg.K, 1e-3);
    pt.alpha_hat_bar.assign(cfg.K, 2.0);
    auto prob = sca::build_subproblem(fp, pt, cfg.beta);
    auto restricted = sca::scheme_restrict(prob, r);
    CHECK(restricted.n == prob.n);
    CHECK(restricted.constraints.size() == prob.constraints.size());
  }

  CHECK_THROWS_AS(sca::scheme_from_string("bogus"), std::invalid_argument);
}

TEST_CASE("solve_frame produces a monotone trace and is deterministic") {
  auto cfg = defaults();
  RngStream rng(17, 0);
  for (int trial = 0; trial < 5; ++trial) {
    auto frame = random_frame(cfg, rng);
    auto res = sca::solve_frame(frame, Scheme::proposed, cfg, cfg.beta);
    CHECK_FALSE(res.used_fallback);
    for (size_t i = 1; i < res.objective_trace.size(); ++i) {
      CHECK(res.objective_trace[i] >= res.objective_trace[i - 1] - 1e-9);
    }
    CHECK(res.iterations <= cfg.max_sca_iter);

    auto res2 = sca::solve_frame(frame, Scheme::proposed, cfg, cfg.beta);
    REQUIRE(res.allocation.p_i.size() == res2.allocation.p_i.size());
    for (int k = 0; k < cfg.K; ++k) {
      CHECK(res.allocation.p_i[k] == res2.allocation.p_i[k]);
      CHECK(res.allocation.p_e[k] == res2.allocation.p_e[k]);
      CHECK(res.allocation.alpha[k] == res2.allocation.alpha[k]);
    }
  }
}

TEST_CASE("solve_frame with zero weight and empty queues is drift-free") {
  auto cfg = defaults();
  cfg.K = 1;
  cfg = validate_config(cfg);
  auto frame = mean_frame(cfg, 0.0, 1e-4, 0.0);
  auto res = sca::solve_frame(frame, Scheme::proposed, cfg, 0.0);
  CHECK_FALSE(res.used_fallback);
  CHECK(std::abs(res.final_objective()) <= 1e-6);
  CHECK(res.allocation.alpha[0] > cfg.alpha_lo);
  CHECK(res.allocation.alpha[0] < cfg.alpha_hi);
  CHECK(res.allocation.p_i[0] >= phy::min_power(cfg.gamma_min, cfg.sigma2, frame.h_norm2[0]));
}

TEST_CASE("post-clip transmit power satisfies the exact energy cap") {
  auto cfg = defaults();
  RngStream rng(23, 0);
  for (int trial = 0; trial < 5; ++trial) {
    auto frame = random_frame(cfg, rng);
    for (Scheme s : {Scheme::proposed, Scheme::equal_power, Scheme::max_power,
                     Scheme::equal_time}) {
      auto res = sca::solve_frame(frame, s, cfg, cfg.beta);
      auto fp = sca::make_frame_problem(frame, cfg, s);
      for (int k = 0; k < cfg.K; ++k) {
        double cap =
            std::min(sca::exact_power_cap(fp, k, res.allocation.alpha[k],
                                          res.allocation.p_e[k] / fp.power_scale),
                     fp.p_bar[k]) *
            fp.power_scale;
        CHECK(res.allocation.p_i[k] <= cap * (1.0 + 1e-12) + 1e-300);
      }
    }
  }
}

// Brute-force maximizer of the exact one-node per-frame problem on a grid of
// (p_e, p_i, alpha, lambda), built from the physical formulas alone.
static double grid_oracle_objective(const SystemConfig& cfg, const FrameState& frame,
                                    int steps) {
  const double g = frame.g_norm2[0], h = frame.h_norm2[0];
  const double q = frame.q[0], a = frame.a[0], E = frame.E[0];
  const double tau = cfg.tau;
  const double tau_d = tau / kDriftTimeUnit;
  const double p_min = phy::min_power(cfg.gamma_min, cfg.sigma2, h);
  const double need = (q + a * tau) / cfg.scales.queue_scale;
  const double L_t = 0.5 * (q / cfg.scales.queue_scale) * (q / cfg.scales.queue_scale) /
                     (tau_d * tau_d);
  phy::RateFn fn{cfg.w_k, h, cfg.sigma2};

  double best = -1e300;
  for (int ia = 0; ia <= steps; ++ia) {
    double alpha = cfg.alpha_lo + (cfg.alpha_hi - cfg.alpha_lo) * ia / steps;
    for (int ie = 0; ie <= steps; ++ie) {
      double p_e = cfg.P_max * ie / steps;
      double e = phy::harvested_energy(cfg.eta, tau, alpha, p_e, g);
      double cap = std::min((E + e) / ((1.0 - alpha) * tau), cfg.P_bar_k);
      if (cap < p_min) continue;
      for (int ip = 0; ip <= steps; ++ip) {
        double p_i = p_min + (cfg.P_bar_k - p_min) * ip / steps;
        if (p_i > cap) break;
        double r = phy::throughput(fn, p_i);
        double served = r * (1.0 - alpha) * tau / cfg.scales.queue_scale;
        double lam_min = std::max(0.0, need - served);
        double util = cfg.beta * r / cfg.scales.rate_scale;
        // smallest grid lambda admitted by the queue bound
        for (int il = 0; il <= steps; ++il) {
          double lam = need * il / steps;
          if (lam < lam_min) continue;
          best = std::max(best, util - 0.5 * lam * lam / (tau_d * tau_d) + L_t);
          break;  // larger lambda only lowers the objective
        }
      }
    }
  }
  return best;
}

TEST_CASE("K=1 frame matches a brute-force grid oracle") {
  auto cfg = defaults();
  cfg.K = 1;
  cfg = validate_config(cfg);
  auto frame = mean_frame(cfg, 5e4, 1e-3);
  auto res = sca::solve_frame(frame, Scheme::proposed, cfg, cfg.beta);
  REQUIRE_FALSE(res.used_fallback);
  double oracle = grid_oracle_objective(cfg, frame, 100);
  CHECK(res.final_objective() ==
        doctest::Approx(oracle).epsilon(0.01));
}
