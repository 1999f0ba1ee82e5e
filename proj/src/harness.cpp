#include "ehnet/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "ehnet/phy.hpp"
#include "ehnet/queues.hpp"
#include "ehnet/units.hpp"

namespace ehnet::harness {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

struct EpisodeStats {
  double mean_sum_throughput = 0.0;  // bit/s
  double mean_total_queue = 0.0;     // bit
  double mean_harvested_w = 0.0;     // W
};

EpisodeStats episode_stats(const EpisodeLog& log, double tau) {
  EpisodeStats s;
  for (int t = 0; t < log.T; ++t) {
    double tp = 0.0, q = 0.0, e = 0.0;
    for (int k = 0; k < log.K; ++k) {
      tp += log.r_bps[t][k];
      q += log.q_bits[t][k];
      e += log.e_j[t][k];
    }
    s.mean_sum_throughput += tp;
    s.mean_total_queue += q;
    s.mean_harvested_w += e / tau;
  }
  s.mean_sum_throughput /= log.T;
  s.mean_total_queue /= log.T;
  s.mean_harvested_w /= log.T;
  return s;
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::mutex err_mutex;
  std::optional<std::string> first_error;
  int n = std::min(threads, count);
  for (int w = 0; w < n; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = e.what();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) throw std::runtime_error(*first_error);
}

}  // namespace

std::vector<sca::Scheme> all_schemes() {
  return {sca::Scheme::proposed, sca::Scheme::equal_power, sca::Scheme::max_power,
          sca::Scheme::equal_time};
}

ExperimentKind experiment_from_string(const std::string& name) {
  if (name == "convergence") return ExperimentKind::convergence;
  if (name == "throughput-vs-time") return ExperimentKind::throughput_vs_time;
  if (name == "beta-sweep") return ExperimentKind::beta_sweep;
  if (name == "pmax-sweep") return ExperimentKind::pmax_sweep;
  throw std::invalid_argument("unknown experiment: " + name);
}

const char* experiment_name(ExperimentKind e) {
  switch (e) {
    case ExperimentKind::convergence: return "convergence";
    case ExperimentKind::throughput_vs_time: return "throughput-vs-time";
    case ExperimentKind::beta_sweep: return "beta-sweep";
    case ExperimentKind::pmax_sweep: return "pmax-sweep";
  }
  return "?";
}

double EpisodeLog::sum_throughput(int t) const {
  double sum = 0.0;
  for (int k = 0; k < K; ++k) sum += r_bps[t][k];
  return sum;
}

queues::QueueTrace EpisodeLog::to_queue_trace(const SystemConfig& cfg) const {
  queues::QueueTrace trace;
  trace.q = q_bits;
  trace.E = E_j;
  trace.served_bits = served_bits;
  trace.harvested_j = e_j;
  trace.total_backlog.resize(T);
  for (int t = 0; t < T; ++t) {
    double sum = 0.0;
    for (int k = 0; k < K; ++k) sum += q_bits[t][k];
    trace.total_backlog[t] = sum;
  }
  (void)cfg;
  return trace;
}

void EpisodeLog::write_csv(std::ostream& os) const {
  os << "t,k,p_e_w,p_i_w,alpha,e_j,a_bps,q_bits,E_j,r_bps,served_bits,sca_iters,objective\n";
  for (int t = 0; t < T; ++t) {
    for (int k = 0; k < K; ++k) {
      os << (t + 1) << ',' << k << ',' << fmt(p_e[t][k]) << ',' << fmt(p_i[t][k]) << ','
         << fmt(alpha[t][k]) << ',' << fmt(e_j[t][k]) << ',' << fmt(a_bps[t][k]) << ','
         << fmt(q_bits[t][k]) << ',' << fmt(E_j[t][k]) << ',' << fmt(r_bps[t][k]) << ','
         << fmt(served_bits[t][k]) << ',' << sca_iters[t] << ',' << fmt(objective[t]) << "\n";
    }
  }
}

namespace {

struct EpisodeEnd {
  std::vector<double> q;
  std::vector<double> E;
  std::vector<double> prev_alpha;
  FrameState next_frame;  // channels/arrivals for frame T+1, current backlogs
};

EpisodeLog run_episode_core(const SystemConfig& cfg, sca::Scheme scheme, int T,
                            unsigned long long realization, EpisodeEnd* end_out) {
  RngStream placement_rng(cfg.rng_seed, cfg.resample_topology ? 2 * realization : 0);
  RngStream frame_rng(cfg.rng_seed, 2 * realization + 1);
  Topology topo = place_nodes(cfg, placement_rng);

  const int K = cfg.K;
  EpisodeLog log;
  log.T = T;
  log.K = K;
  log.topology = topo;
  auto grid = [&](std::vector<std::vector<double>>& v) {
    v.assign(T, std::vector<double>(K, 0.0));
  };
  grid(log.p_e);
  grid(log.p_i);
  grid(log.alpha);
  grid(log.e_j);
  grid(log.a_bps);
  grid(log.q_bits);
  grid(log.E_j);
  grid(log.r_bps);
  grid(log.served_bits);
  grid(log.g_norm2);
  grid(log.h_norm2);
  log.sca_iters.assign(T, 0);
  log.objective.assign(T, 0.0);
  log.fallback.assign(T, false);

  std::vector<double> q(K, 0.0), E(K, 0.0), prev_alpha(K, 0.5);

  for (int t = 1; t <= T; ++t) {
    auto [g, h] = sample_channels(cfg, topo, frame_rng);
    auto a = draw_arrivals(cfg, frame_rng);
    FrameState frame{t, g, h, a, q, E};
    sca::ScaResult res = sca::solve_frame(frame, scheme, cfg, cfg.beta, &prev_alpha);

    int row = t - 1;
    for (int k = 0; k < K; ++k) {
      double p_e = res.allocation.p_e[k];
      double p_i = res.allocation.p_i[k];
      double alpha = res.allocation.alpha[k];
      double e = phy::harvested_energy(cfg.eta, cfg.tau, alpha, p_e, g[k]);
      phy::RateFn fn{cfg.w_k, h[k], cfg.sigma2};
      double r = phy::throughput(fn, p_i);
      double service = r * (1.0 - alpha) * cfg.tau;
      double served = cfg.cap_service_to_backlog
                          ? std::min(q[k] + a[k] * cfg.tau, service)
                          : service;

      log.p_e[row][k] = p_e;
      log.p_i[row][k] = p_i;
      log.alpha[row][k] = alpha;
      log.e_j[row][k] = e;
      log.a_bps[row][k] = a[k];
      log.q_bits[row][k] = q[k];
      log.E_j[row][k] = E[k];
      log.r_bps[row][k] = r;
      log.served_bits[row][k] = served;

      q[k] = queues::update_data_queue(q[k], a[k], cfg.tau, r, alpha);
      E[k] = queues::update_energy_queue(E[k], e, p_i, alpha, cfg.tau, cfg.E_max_k);
    }
    log.sca_iters[row] = res.iterations;
    log.objective[row] = res.final_objective();
    log.fallback[row] = res.used_fallback;
    prev_alpha = res.allocation.alpha;
  }

  if (end_out) {
    auto [g, h] = sample_channels(cfg, topo, frame_rng);
    auto a = draw_arrivals(cfg, frame_rng);
    end_out->q = q;
    end_out->E = E;
    end_out->prev_alpha = prev_alpha;
    end_out->next_frame = FrameState{T + 1, g, h, a, q, E};
  }
  return log;
}

}  // namespace

EpisodeLog run_episode(const SystemConfig& cfg, sca::Scheme scheme, int T,
                       unsigned long long realization) {
  return run_episode_core(cfg, scheme, T, realization, nullptr);
}

// --- Experiments -------------------------------------------------------------

namespace {

namespace fs = std::filesystem;

void write_text_file(const std::string& path, const std::string& contents,
                     std::vector<std::string>& written) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write output file: " + path);
  out << contents;
  written.push_back(path);
}

std::string scheme_columns_header(const std::vector<sca::Scheme>& schemes) {
  std::string h;
  for (auto s : schemes) {
    h += ',';
    std::string n = sca::scheme_name(s);
    std::replace(n.begin(), n.end(), '-', '_');
    h += n;
  }
  return h;
}

void validate_spec(const ExperimentSpec& spec) {
  if (spec.schemes.empty()) throw std::invalid_argument("experiment needs at least one scheme");
  if (spec.realizations < 1) throw std::invalid_argument("realizations must be >= 1");
  if (spec.frames < 1) throw std::invalid_argument("frames must be >= 1");
  bool sweep = spec.kind == ExperimentKind::beta_sweep || spec.kind == ExperimentKind::pmax_sweep;
  if (sweep) {
    if (spec.grid.empty()) throw std::invalid_argument("sweep experiment needs a non-empty grid");
    for (size_t i = 1; i < spec.grid.size(); ++i) {
      if (spec.grid[i] <= spec.grid[i - 1]) {
        throw std::invalid_argument("sweep grid must be strictly increasing");
      }
    }
  }
}

SystemConfig config_for_grid(const SystemConfig& base, ExperimentKind kind, double grid_value) {
  SystemConfig cfg = base;
  if (kind == ExperimentKind::beta_sweep) cfg.beta = grid_value;
  if (kind == ExperimentKind::pmax_sweep) cfg.P_max = dbm_to_watt(grid_value);
  return validate_config(cfg);
}

std::string manifest_json(const ExperimentSpec& spec, const SystemConfig& cfg,
                          const ExperimentResult& result) {
  nlohmann::json j;
  j["created_at_utc"] = []() {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return std::string(buf);
  }();
  j["experiment"] = experiment_name(spec.kind);
  std::vector<std::string> schemes;
  for (auto s : spec.schemes) schemes.emplace_back(sca::scheme_name(s));
  j["schemes"] = schemes;
  j["grid"] = spec.grid;
  j["frames"] = spec.frames;
  j["realizations"] = spec.realizations;
  j["seed"] = spec.seed;
  j["failed_realizations"] = result.failed_realizations;
  j["files"] = result.written_files;

  nlohmann::json c;
  std::istringstream lines(config_to_string(cfg));
  std::string line;
  while (std::getline(lines, line)) {
    auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    c[line.substr(0, eq)] = line.substr(eq + 3);
  }
  j["config"] = c;
  j["unit_scales"] = {{"rate_scale", cfg.scales.rate_scale},
                      {"queue_scale", cfg.scales.queue_scale},
                      {"power_scale", cfg.scales.power_scale},
                      {"energy_scale", cfg.scales.energy_scale}};
  j["drift_time_unit_s"] = kDriftTimeUnit;
  return j.dump(2) + "\n";
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, const SystemConfig& base_cfg,
                                const std::string& out_dir) {
  validate_spec(spec);
  fs::create_directories(out_dir);
  auto path = [&](const std::string& name) { return (fs::path(out_dir) / name).string(); };

  SystemConfig cfg = base_cfg;
  cfg.rng_seed = spec.seed;
  cfg = validate_config(cfg);

  int threads = spec.threads > 0 ? spec.threads
                                 : std::max(1u, std::thread::hardware_concurrency());
  ExperimentResult result;

  const auto& schemes = spec.schemes;
  const int R = spec.realizations;
  const int T = spec.frames;

  if (spec.kind == ExperimentKind::convergence) {
    // Warm the network for `frames` frames, then trace the SCA iterations of
    // the next frame. Both a single-channel trace and an R-averaged trace
    // are emitted.
    struct Trace {
      std::vector<double> sum_tp;  // per kappa
      sca::ScaResult res;
      bool ok = false;
    };
    std::vector<std::vector<Trace>> traces(schemes.size(), std::vector<Trace>(R));
    std::atomic<int> failures{0};
    parallel_for(R, threads, [&](int r) {
      for (size_t si = 0; si < schemes.size(); ++si) {
        try {
          SystemConfig local = cfg;
          EpisodeEnd end;
          run_episode_core(local, schemes[si], T, r, &end);
          sca::ScaResult res =
              sca::solve_frame(end.next_frame, schemes[si], local, local.beta, &end.prev_alpha);
          traces[si][r].sum_tp = res.sum_throughput_trace;
          traces[si][r].res = std::move(res);
          traces[si][r].ok = true;
        } catch (const std::exception&) {
          failures.fetch_add(1);
        }
      }
    });
    result.failed_realizations = failures.load();

    size_t max_len = 1;
    for (auto& per_scheme : traces)
      for (auto& tr : per_scheme)
        if (tr.ok) max_len = std::max(max_len, tr.sum_tp.size());

    auto padded = [&](const Trace& tr, size_t i) {
      if (tr.sum_tp.empty()) return 0.0;
      return tr.sum_tp[std::min(i, tr.sum_tp.size() - 1)];
    };

    for (int single = 1; single >= 0; --single) {
      std::ostringstream os;
      os << "kappa" << scheme_columns_header(schemes) << "\n";
      for (size_t i = 0; i < max_len; ++i) {
        os << i;
        for (size_t si = 0; si < schemes.size(); ++si) {
          double v = 0.0;
          if (single) {
            v = traces[si][0].ok ? padded(traces[si][0], i) : 0.0;
          } else {
            int n = 0;
            for (int r = 0; r < R; ++r) {
              if (!traces[si][r].ok) continue;
              v += padded(traces[si][r], i);
              ++n;
            }
            if (n > 0) v /= n;
          }
          os << ',' << fmt(v);
        }
        os << "\n";
      }
      write_text_file(path(single ? "fig_convergence_single.csv" : "fig_convergence_avg.csv"),
                      os.str(), result.written_files);
    }

    // Per-scheme SCA trace files for the single-channel run.
    for (size_t si = 0; si < schemes.size(); ++si) {
      const auto& tr = traces[si][0];
      std::ostringstream os;
      os << "frame,kappa,objective,max_constraint_violation,solver_status\n";
      if (tr.ok) {
        const auto& res = tr.res;
        for (size_t i = 0; i < res.objective_trace.size(); ++i) {
          const char* status =
              (i == 0) ? "initial"
                       : solver::status_name(res.status_trace[i - 1]);
          os << (T + 1) << ',' << i << ',' << fmt(res.objective_trace[i]) << ','
             << fmt(res.violation_trace[i]) << ',' << status << "\n";
        }
      }
      std::string name = std::string("sca_trace_") + sca::scheme_name(schemes[si]) + ".csv";
      write_text_file(path(name), os.str(), result.written_files);
    }
  } else {
    // Episode-statistics experiments share one engine: a grid of configs
    // (a single point for throughput-vs-time) by schemes by realizations.
    std::vector<double> grid = spec.grid;
    if (grid.empty()) grid = {cfg.beta};

    struct Cell {
      std::vector<EpisodeStats> stats;   // per realization, valid entries only
      std::vector<char> ok;              // per realization
      std::vector<std::vector<double>> sum_tp_per_frame;  // [realization][frame]
    };
    std::vector<std::vector<Cell>> cells(grid.size(), std::vector<Cell>(schemes.size()));
    for (auto& row : cells)
      for (auto& c : row) {
        c.stats.resize(R);
        c.ok.assign(R, 0);
        if (spec.kind == ExperimentKind::throughput_vs_time)
          c.sum_tp_per_frame.assign(R, std::vector<double>(T, 0.0));
      }

    // First realization's frame logs for the first grid point.
    std::vector<std::string> frame_logs(schemes.size());

    parallel_for(R, threads, [&](int r) {
      for (size_t gi = 0; gi < grid.size(); ++gi) {
        SystemConfig gcfg = spec.kind == ExperimentKind::throughput_vs_time
                                ? cfg
                                : config_for_grid(cfg, spec.kind, grid[gi]);
        for (size_t si = 0; si < schemes.size(); ++si) {
          try {
            EpisodeLog log = run_episode_core(gcfg, schemes[si], T, r, nullptr);
            auto& cell = cells[gi][si];
            cell.stats[r] = episode_stats(log, gcfg.tau);
            cell.ok[r] = 1;
            if (spec.kind == ExperimentKind::throughput_vs_time) {
              for (int t = 0; t < T; ++t) cell.sum_tp_per_frame[r][t] = log.sum_throughput(t);
            }
            if (r == 0 && gi == 0) {
              std::ostringstream os;
              log.write_csv(os);
              frame_logs[si] = os.str();
            }
          } catch (const std::exception&) {
            // excluded below; counted once per (grid, scheme, realization)
          }
        }
      }
    });

    int failures = 0;
    for (auto& row : cells)
      for (auto& c : row)
        for (int r = 0; r < R; ++r)
          if (!c.ok[r]) ++failures;
    result.failed_realizations = failures;
    int total_runs = static_cast<int>(grid.size() * schemes.size()) * R;
    if (failures > 0 && failures * 100 > total_runs) {
      throw std::runtime_error("more than 1% of realizations failed");
    }

    // Aggregate CSV.
    std::ostringstream agg;
    agg << "grid_value,scheme,mean_sum_throughput_bps,std_sum_throughput_bps,"
           "avg_total_queue_bits,avg_harvested_w\n";
    for (size_t gi = 0; gi < grid.size(); ++gi) {
      for (size_t si = 0; si < schemes.size(); ++si) {
        const auto& c = cells[gi][si];
        double n = 0, mean_tp = 0, mean_q = 0, mean_h = 0;
        for (int r = 0; r < R; ++r) {
          if (!c.ok[r]) continue;
          ++n;
          mean_tp += c.stats[r].mean_sum_throughput;
          mean_q += c.stats[r].mean_total_queue;
          mean_h += c.stats[r].mean_harvested_w;
        }
        if (n > 0) {
          mean_tp /= n;
          mean_q /= n;
          mean_h /= n;
        }
        double var = 0;
        for (int r = 0; r < R; ++r) {
          if (!c.ok[r]) continue;
          double d = c.stats[r].mean_sum_throughput - mean_tp;
          var += d * d;
        }
        double sd = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
        AggregateRow row{grid[gi], schemes[si], mean_tp, sd, mean_q, mean_h};
        result.rows.push_back(row);
        agg << fmt(row.grid_value) << ',' << sca::scheme_name(row.scheme) << ','
            << fmt(row.mean_sum_throughput_bps) << ',' << fmt(row.std_sum_throughput_bps) << ','
            << fmt(row.avg_total_queue_bits) << ',' << fmt(row.avg_harvested_w) << "\n";
      }
    }
    std::string agg_name = std::string("experiment_") + experiment_name(spec.kind) + ".csv";
    write_text_file(path(agg_name), agg.str(), result.written_files);

    // Per-figure plot CSVs.
    auto column_csv = [&](const std::string& x_name, const std::vector<double>& xs,
                          auto&& value_at) {
      std::ostringstream os;
      os << x_name << scheme_columns_header(schemes) << "\n";
      for (size_t i = 0; i < xs.size(); ++i) {
        os << fmt(xs[i]);
        for (size_t si = 0; si < schemes.size(); ++si) os << ',' << fmt(value_at(i, si));
        os << "\n";
      }
      return os.str();
    };

    if (spec.kind == ExperimentKind::throughput_vs_time) {
      std::vector<double> ts(T);
      for (int t = 0; t < T; ++t) ts[t] = t + 1;
      auto value = [&](size_t i, size_t si) {
        const auto& c = cells[0][si];
        double v = 0;
        int n = 0;
        for (int r = 0; r < R; ++r) {
          if (!c.ok[r]) continue;
          v += c.sum_tp_per_frame[r][i];
          ++n;
        }
        return n > 0 ? v / n : 0.0;
      };
      write_text_file(path("fig_throughput_vs_time.csv"), column_csv("t", ts, value),
                      result.written_files);
    } else if (spec.kind == ExperimentKind::beta_sweep) {
      auto row_of = [&](size_t gi, size_t si) -> const AggregateRow& {
        return result.rows[gi * schemes.size() + si];
      };
      write_text_file(path("fig_beta_queue.csv"),
                      column_csv("beta", grid,
                                 [&](size_t i, size_t si) {
                                   return row_of(i, si).avg_total_queue_bits;
                                 }),
                      result.written_files);
    } else if (spec.kind == ExperimentKind::pmax_sweep) {
      auto row_of = [&](size_t gi, size_t si) -> const AggregateRow& {
        return result.rows[gi * schemes.size() + si];
      };
      write_text_file(path("fig_pmax_throughput.csv"),
                      column_csv("pmax_dbm", grid,
                                 [&](size_t i, size_t si) {
                                   return row_of(i, si).mean_sum_throughput_bps;
                                 }),
                      result.written_files);
      write_text_file(path("fig_pmax_harvested.csv"),
                      column_csv("pmax_dbm", grid,
                                 [&](size_t i, size_t si) {
                                   return row_of(i, si).avg_harvested_w;
                                 }),
                      result.written_files);
    }

    for (size_t si = 0; si < schemes.size(); ++si) {
      if (frame_logs[si].empty()) continue;
      std::string name = std::string("frame_log_") + sca::scheme_name(schemes[si]) + ".csv";
      write_text_file(path(name), frame_logs[si], result.written_files);
    }
  }

  write_text_file(path("manifest.json"), manifest_json(spec, cfg, result),
                  result.written_files);
  return result;
}

}  // namespace ehnet::harness
