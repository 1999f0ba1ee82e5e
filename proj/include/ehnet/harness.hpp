#ifndef EHNET_HARNESS_HPP_
#define EHNET_HARNESS_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "ehnet/config.hpp"
#include "ehnet/queues.hpp"
#include "ehnet/sca.hpp"
#include "ehnet/stochastic.hpp"

namespace ehnet::harness {

// Full record of one episode: per-frame, per-node decisions and states, SI
// units throughout.
struct EpisodeLog {
  int T = 0;
  int K = 0;
  Topology topology;
  // [frame][node]
  std::vector<std::vector<double>> p_e, p_i, alpha;
  std::vector<std::vector<double>> e_j;        // harvested energy (J)
  std::vector<std::vector<double>> a_bps;      // arrivals
  std::vector<std::vector<double>> q_bits;     // backlog at frame start
  std::vector<std::vector<double>> E_j;        // battery at frame start
  std::vector<std::vector<double>> r_bps;      // WIT-phase rate
  std::vector<std::vector<double>> served_bits;
  std::vector<std::vector<double>> g_norm2, h_norm2;
  // per frame
  std::vector<int> sca_iters;
  std::vector<double> objective;
  std::vector<bool> fallback;

  double sum_throughput(int t) const;  // bit/s
  queues::QueueTrace to_queue_trace(const SystemConfig& cfg) const;
  void write_csv(std::ostream& os) const;  // schema: see README
};

// Runs Algorithm-style episode: empty queues, then per frame draw state,
// optimize, apply queue updates.
EpisodeLog run_episode(const SystemConfig& cfg, sca::Scheme scheme, int T,
                       unsigned long long realization);

enum class ExperimentKind { convergence, throughput_vs_time, beta_sweep, pmax_sweep };
ExperimentKind experiment_from_string(const std::string& name);
const char* experiment_name(ExperimentKind e);

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::convergence;
  std::vector<sca::Scheme> schemes;
  std::vector<double> grid;  // beta values, or P_max in dBm; empty for non-sweeps
  int frames = 200;
  int realizations = 50;
  unsigned long long seed = 1;
  int threads = 0;  // 0 = hardware concurrency
};

struct AggregateRow {
  double grid_value = 0.0;
  sca::Scheme scheme = sca::Scheme::proposed;
  double mean_sum_throughput_bps = 0.0;
  double std_sum_throughput_bps = 0.0;
  double avg_total_queue_bits = 0.0;
  double avg_harvested_w = 0.0;
};

struct ExperimentResult {
  std::vector<AggregateRow> rows;
  int failed_realizations = 0;
  std::vector<std::string> written_files;
};

// Runs the experiment, writing per-figure CSVs, aggregate CSVs, a frame log
// for realization 0 of the first grid point, and a JSON run manifest into
// `out_dir`. A realization that fails is excluded; more than 1% failures
// aborts with an error.
ExperimentResult run_experiment(const ExperimentSpec& spec, const SystemConfig& cfg,
                                const std::string& out_dir);

std::vector<sca::Scheme> all_schemes();

}  // namespace ehnet::harness

#endif  // EHNET_HARNESS_HPP_
