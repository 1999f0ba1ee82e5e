#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ehnet/harness.hpp"
#include "ehnet/queues.hpp"

using namespace ehnet;
namespace fs = std::filesystem;

namespace {

SystemConfig small_cfg() {
  SystemConfig cfg;
  cfg.K = 2;
  cfg.rng_seed = 11;
  return validate_config(cfg);
}

std::string log_csv(const harness::EpisodeLog& log) {
  std::ostringstream os;
  log.write_csv(os);
  return os.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("single frame with no arrivals leaves the data queue empty") {
  auto cfg = small_cfg();
  cfg.a_lo = cfg.a_hi = cfg.a_max = 0.0;
  cfg = validate_config(cfg);
  auto log = harness::run_episode(cfg, sca::Scheme::proposed, 2, 0);
  for (int k = 0; k < cfg.K; ++k) {
    CHECK(log.q_bits[0][k] == 0.0);
    CHECK(log.E_j[0][k] == 0.0);
    CHECK(log.q_bits[1][k] == 0.0);  // still empty at frame 2
    CHECK(log.E_j[1][k] >= 0.0);     // harvested minus spend stays nonnegative
  }
}

TEST_CASE("episodes are deterministic for a fixed seed") {
  auto cfg = small_cfg();
  auto a = harness::run_episode(cfg, sca::Scheme::proposed, 5, 3);
  auto b = harness::run_episode(cfg, sca::Scheme::proposed, 5, 3);
  CHECK(log_csv(a) == log_csv(b));
  auto c = harness::run_episode(cfg, sca::Scheme::proposed, 5, 4);
  CHECK(log_csv(a) != log_csv(c));
}

TEST_CASE("episode log replays exactly through the queue recursions") {
  auto cfg = small_cfg();
  const int T = 10;
  auto log = harness::run_episode(cfg, sca::Scheme::proposed, T, 1);
  CHECK(log.T * log.K == 20);

  std::vector<double> q(cfg.K, 0.0), E(cfg.K, 0.0);
  for (int t = 0; t < T; ++t) {
    for (int k = 0; k < cfg.K; ++k) {
      CHECK(log.q_bits[t][k] == q[k]);
      CHECK(log.E_j[t][k] == E[k]);
      CHECK(q[k] >= 0.0);
      CHECK(E[k] >= 0.0);
      CHECK(E[k] <= cfg.E_max_k);
      q[k] = queues::update_data_queue(q[k], log.a_bps[t][k], cfg.tau, log.r_bps[t][k],
                                       log.alpha[t][k]);
      E[k] = queues::update_energy_queue(E[k], log.e_j[t][k], log.p_i[t][k], log.alpha[t][k],
                                         cfg.tau, cfg.E_max_k);
    }
  }
}

TEST_CASE("frame log CSV header matches the interface") {
  auto cfg = small_cfg();
  auto log = harness::run_episode(cfg, sca::Scheme::equal_time, 2, 0);
  std::string csv = log_csv(log);
  CHECK(csv.rfind("t,k,p_e_w,p_i_w,alpha,e_j,a_bps,q_bits,E_j,r_bps,served_bits,sca_iters,"
                  "objective\n", 0) == 0);
  // T*K data rows
  int rows = -1;  // exclude header
  for (char ch : csv)
    if (ch == '\n') ++rows;
  CHECK(rows == log.T * log.K);
}

TEST_CASE("run_experiment with one realization reproduces the single episode") {
  auto cfg = small_cfg();
  harness::ExperimentSpec spec;
  spec.kind = harness::ExperimentKind::throughput_vs_time;
  spec.schemes = {sca::Scheme::proposed};
  spec.frames = 5;
  spec.realizations = 1;
  spec.seed = cfg.rng_seed;
  spec.threads = 1;
  fs::path dir = fs::temp_directory_path() / "ehnet_test_r1";
  fs::remove_all(dir);
  auto result = harness::run_experiment(spec, cfg, dir.string());
  REQUIRE(result.rows.size() == 1);
  CHECK(result.rows[0].std_sum_throughput_bps == 0.0);

  auto log = harness::run_episode(cfg, sca::Scheme::proposed, 5, 0);
  double mean_tp = 0.0;
  for (int t = 0; t < 5; ++t) mean_tp += log.sum_throughput(t);
  mean_tp /= 5;
  CHECK(result.rows[0].mean_sum_throughput_bps == doctest::Approx(mean_tp));
  fs::remove_all(dir);
}

TEST_CASE("beta sweep emits one row per grid point and scheme") {
  auto cfg = small_cfg();
  harness::ExperimentSpec spec;
  spec.kind = harness::ExperimentKind::beta_sweep;
  spec.schemes = {sca::Scheme::proposed, sca::Scheme::equal_time};
  spec.grid = {1e-6, 1e-5, 1e-4, 1e-3};
  spec.frames = 3;
  spec.realizations = 2;
  spec.seed = 5;
  spec.threads = 2;
  fs::path dir = fs::temp_directory_path() / "ehnet_test_sweep";
  fs::remove_all(dir);
  auto result = harness::run_experiment(spec, cfg, dir.string());
  CHECK(result.rows.size() == 4 * 2);
  CHECK(fs::exists(dir / "experiment_beta-sweep.csv"));
  CHECK(fs::exists(dir / "fig_beta_queue.csv"));
  CHECK(fs::exists(dir / "manifest.json"));
  fs::remove_all(dir);
}

TEST_CASE("experiment outputs are byte-identical across runs except the manifest") {
  auto cfg = small_cfg();
  harness::ExperimentSpec spec;
  spec.kind = harness::ExperimentKind::throughput_vs_time;
  spec.schemes = harness::all_schemes();
  spec.frames = 3;
  spec.realizations = 2;
  spec.seed = 9;
  spec.threads = 2;
  fs::path d1 = fs::temp_directory_path() / "ehnet_det_a";
  fs::path d2 = fs::temp_directory_path() / "ehnet_det_b";
  fs::remove_all(d1);
  fs::remove_all(d2);
  harness::run_experiment(spec, cfg, d1.string());
  harness::run_experiment(spec, cfg, d2.string());
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(d1)) {
    auto name = entry.path().filename().string();
    if (name == "manifest.json") continue;
    CHECK(slurp(entry.path()) == slurp(d2 / name));
    ++compared;
  }
  CHECK(compared >= 2);
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("aggregates are permutation invariant over realization order") {
  // Thread counts shuffle completion order; the aggregates must not care.
  auto cfg = small_cfg();
  harness::ExperimentSpec spec;
  spec.kind = harness::ExperimentKind::throughput_vs_time;
  spec.schemes = {sca::Scheme::equal_time};
  spec.frames = 3;
  spec.realizations = 4;
  spec.seed = 2;
  fs::path d1 = fs::temp_directory_path() / "ehnet_perm_a";
  fs::path d2 = fs::temp_directory_path() / "ehnet_perm_b";
  fs::remove_all(d1);
  fs::remove_all(d2);
  spec.threads = 1;
  auto r1 = harness::run_experiment(spec, cfg, d1.string());
  spec.threads = 4;
  auto r2 = harness::run_experiment(spec, cfg, d2.string());
  CHECK(r1.rows[0].mean_sum_throughput_bps == r2.rows[0].mean_sum_throughput_bps);
  CHECK(r1.rows[0].avg_total_queue_bits == r2.rows[0].avg_total_queue_bits);
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("experiment spec validation") {
  auto cfg = small_cfg();
  harness::ExperimentSpec spec;
  spec.kind = harness::ExperimentKind::beta_sweep;
  spec.schemes = {sca::Scheme::proposed};
  spec.grid = {1e-4, 1e-5};  // not increasing
  CHECK_THROWS_AS(harness::run_experiment(spec, cfg, "unused_dir"), std::invalid_argument);
  spec.grid = {};
  CHECK_THROWS_AS(harness::run_experiment(spec, cfg, "unused_dir"), std::invalid_argument);
  CHECK_THROWS_AS(harness::experiment_from_string("nope"), std::invalid_argument);
}

TEST_CASE("convergence experiment writes SCA traces per scheme") {
  auto cfg = small_cfg();
  harness::ExperimentSpec spec;
  spec.kind = harness::ExperimentKind::convergence;
  spec.schemes = harness::all_schemes();
  spec.frames = 3;  // warm-up horizon
  spec.realizations = 2;
  spec.seed = 7;
  spec.threads = 2;
  fs::path dir = fs::temp_directory_path() / "ehnet_test_conv";
  fs::remove_all(dir);
  harness::run_experiment(spec, cfg, dir.string());
  for (const char* s : {"proposed", "equal-power", "max-power", "equal-time"}) {
    CHECK(fs::exists(dir / (std::string("sca_trace_") + s + ".csv")));
  }
  CHECK(fs::exists(dir / "fig_convergence_single.csv"));
  CHECK(fs::exists(dir / "fig_convergence_avg.csv"));
  auto trace = slurp(dir / "sca_trace_proposed.csv");
  CHECK(trace.rfind("frame,kappa,objective,max_constraint_violation,solver_status\n", 0) == 0);
  fs::remove_all(dir);
}
