#ifndef EHNET_CONFIG_HPP_
#define EHNET_CONFIG_HPP_

#include <array>
#include <string>

#include "ehnet/units.hpp"

namespace ehnet {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

// All physical, protocol and algorithmic parameters of one network instance.
// Defaults reproduce the reference setup: a power beacon at (-250, 0) and an
// access point at the origin serving K nodes placed uniformly in a 250 m
// disk, 10 MHz split by FDMA, 1 ms frames.
struct SystemConfig {
  // Topology / radio
  int K = 4;                    // number of sensor nodes
  int M = 16;                   // beacon antennas
  int N = 16;                   // access-point antennas
  double P_max = dbm_to_watt(43.0);   // beacon power budget (W)
  double P_bar_k = dbm_to_watt(10.0); // per-node max transmit power (W)
  double eta = 0.6;             // energy conversion efficiency, in (0,1)
  double tau = 1e-3;            // frame duration (s)
  double W_total = 1e7;         // system bandwidth (Hz)
  double w_k = 0.0;             // per-node bandwidth, derived = W_total/K
  double sigma2 = 1e-13;        // noise power per node band (W)
  double gamma_min = db_to_linear(-10.0);  // minimum SNR (linear)
  double E_max_k = 3e3;         // battery capacity (J)
  double a_lo = 40e6;           // arrival-rate interval low end (bit/s)
  double a_hi = 60e6;           // arrival-rate interval high end (bit/s)
  double a_max = 60e6;          // hard arrival upper bound (bit/s)
  double path_loss_exp = 3.0;

  // Geometry
  Vec2 pb_pos{-250.0, 0.0};     // power beacon
  Vec2 ap_pos{0.0, 0.0};        // access point
  double disk_radius = 250.0;   // node placement disk, centered at the AP (m)

  // Drift-plus-penalty scaling factor
  double beta = 1e-4;

  // Harvest-time fraction box. The surrogate constraints divide by (1-alpha);
  // the box keeps that denominator away from zero.
  double alpha_lo = 0.01;
  double alpha_hi = 0.99;

  // SCA engine
  double sca_tol = 1e-4;        // relative objective change stop
  int max_sca_iter = 20;
  double psi_floor = 1e-3;      // backlog-deficit slack floor, scaled queue units (Mbit)
  double strict_margin = 1e-3;  // relative pull-in used to build strictly feasible points

  // Interior-point solver
  double feas_tol = 1e-9;
  double gap_tol = 1e-7;
  double kkt_tol = 1e-6;
  int max_outer_iter = 50;
  int max_inner_iter = 100;

  // Simulation behavior
  bool cap_service_to_backlog = false;  // account served bits capped by backlog
  bool resample_topology = true;        // new node placement per realization
  unsigned long long rng_seed = 1;

  UnitScales scales;
};

// Checks every config invariant and populates derived fields (w_k).
// Throws std::invalid_argument naming the first violated invariant.
SystemConfig validate_config(SystemConfig cfg);

// Flat key=value config file, keys matching SystemConfig field names.
// Powers may be given in dBm with a `_dbm` key suffix or in watts without.
SystemConfig load_config_file(const std::string& path);
void apply_config_line(SystemConfig& cfg, const std::string& key, const std::string& value);
std::string config_to_string(const SystemConfig& cfg);

}  // namespace ehnet

#endif  // EHNET_CONFIG_HPP_
