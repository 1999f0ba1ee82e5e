#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ehnet/config.hpp"
#include "ehnet/harness.hpp"

namespace {

std::vector<double> default_grid(ehnet::harness::ExperimentKind kind) {
  using ehnet::harness::ExperimentKind;
  if (kind == ExperimentKind::beta_sweep) return {1e-6, 1e-5, 1e-4, 1e-3};
  if (kind == ExperimentKind::pmax_sweep) return {40.0, 43.0, 46.0, 50.0, 55.0, 60.0};
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-harvesting sensor network simulator and per-frame resource optimizer"};

  std::string config_path;
  std::string scheme = "all";
  std::string experiment = "convergence";
  std::string out_dir = "out";
  std::vector<double> grid;
  int frames = 200;
  int realizations = 50;
  int threads = 0;
  unsigned long long seed = 1;
  double beta = -1.0;

  app.add_option("--config", config_path, "Config file (key=value); defaults used if omitted");
  app.add_option("--scheme", scheme,
                 "Scheme: proposed|equal-power|max-power|equal-time|all")
      ->default_str("all");
  app.add_option("--experiment", experiment,
                 "Experiment: convergence|throughput-vs-time|beta-sweep|pmax-sweep")
      ->default_str("convergence");
  app.add_option("--frames", frames, "Frames per episode (warm-up horizon for convergence)");
  app.add_option("--realizations", realizations, "Independent channel realizations");
  app.add_option("--seed", seed, "Base RNG seed");
  app.add_option("--beta", beta, "Drift-penalty scaling factor override");
  app.add_option("--grid", grid, "Sweep grid values (beta, or P_max in dBm)");
  app.add_option("--out", out_dir, "Output directory")->default_str("out");
  app.add_option("--threads", threads, "Worker threads (0 = hardware)");

  CLI11_PARSE(app, argc, argv);

  try {
    ehnet::SystemConfig cfg =
        config_path.empty() ? ehnet::validate_config(ehnet::SystemConfig{})
                            : ehnet::load_config_file(config_path);
    if (beta > 0.0) cfg.beta = beta;
    cfg = ehnet::validate_config(cfg);

    ehnet::harness::ExperimentSpec spec;
    spec.kind = ehnet::harness::experiment_from_string(experiment);
    if (scheme == "all") {
      spec.schemes = ehnet::harness::all_schemes();
    } else {
      spec.schemes = {ehnet::sca::scheme_from_string(scheme)};
    }
    spec.grid = grid.empty() ? default_grid(spec.kind) : grid;
    spec.frames = frames;
    spec.realizations = realizations;
    spec.seed = seed;
    spec.threads = threads;

    auto result = ehnet::harness::run_experiment(spec, cfg, out_dir);
    std::cout << "experiment " << experiment << " done, " << result.written_files.size()
              << " files in " << out_dir;
    if (result.failed_realizations > 0) {
      std::cout << " (" << result.failed_realizations << " failed realizations excluded)";
    }
    std::cout << "\n";
    for (const auto& row : result.rows) {
      std::printf("  grid=%g scheme=%s throughput=%.4g bps queue=%.4g bits harvest=%.4g W\n",
                  row.grid_value, ehnet::sca::scheme_name(row.scheme),
                  row.mean_sum_throughput_bps, row.avg_total_queue_bits, row.avg_harvested_w);
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
