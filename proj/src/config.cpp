#include "ehnet/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace ehnet {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "on") return true;
  if (v == "0" || v == "false" || v == "off") return false;
  throw std::invalid_argument("bad boolean value: " + v);
}

}  // namespace

SystemConfig validate_config(SystemConfig cfg) {
  require(cfg.K >= 1, "K < 1");
  require(cfg.M >= 1, "M < 1");
  require(cfg.N >= 1, "N < 1");
  require(cfg.eta > 0.0 && cfg.eta < 1.0, "eta out of (0,1)");
  require(cfg.tau > 0.0, "tau <= 0");
  require(cfg.W_total > 0.0, "W_total <= 0");
  require(cfg.P_bar_k > 0.0, "P_bar_k <= 0");
  require(cfg.P_max > 0.0, "P_max <= 0");
  require(cfg.a_lo >= 0.0, "a_lo < 0");
  require(cfg.a_lo <= cfg.a_hi, "a_lo > a_hi");
  require(cfg.a_hi <= cfg.a_max, "a_hi > a_max");
  require(std::isfinite(cfg.a_max), "a_max not finite");
  require(cfg.sigma2 > 0.0, "sigma2 <= 0");
  require(cfg.gamma_min > 0.0, "gamma_min <= 0");
  require(cfg.E_max_k > 0.0, "E_max_k <= 0");
  require(cfg.beta > 0.0, "beta <= 0");
  require(cfg.path_loss_exp > 0.0, "path_loss_exp <= 0");
  require(cfg.disk_radius > 0.0, "disk_radius <= 0");
  require(cfg.alpha_lo > 0.0 && cfg.alpha_hi < 1.0 && cfg.alpha_lo < cfg.alpha_hi,
          "alpha box out of (0,1)");
  require(cfg.psi_floor > 0.0, "psi_floor <= 0");
  require(cfg.strict_margin > 0.0 && cfg.strict_margin < 0.5, "strict_margin out of (0,0.5)");
  require(cfg.sca_tol > 0.0, "sca_tol <= 0");
  require(cfg.max_sca_iter >= 1, "max_sca_iter < 1");
  require(cfg.feas_tol > 0.0 && cfg.gap_tol > 0.0 && cfg.kkt_tol > 0.0,
          "solver tolerance <= 0");
  require(cfg.max_outer_iter >= 1 && cfg.max_inner_iter >= 1, "solver iteration cap < 1");
  require(cfg.scales.valid(), "unit scales not positive");

  cfg.w_k = cfg.W_total / cfg.K;
  return cfg;
}

void apply_config_line(SystemConfig& cfg, const std::string& key, const std::string& value) {
  auto as_d = [&value]() { return std::stod(value); };
  auto as_i = [&value]() { return std::stoi(value); };

  if (key == "K") cfg.K = as_i();
  else if (key == "M") cfg.M = as_i();
  else if (key == "N") cfg.N = as_i();
  else if (key == "P_max") cfg.P_max = as_d();
  else if (key == "P_max_dbm") cfg.P_max = dbm_to_watt(as_d());
  else if (key == "P_bar_k") cfg.P_bar_k = as_d();
  else if (key == "P_bar_k_dbm") cfg.P_bar_k = dbm_to_watt(as_d());
  else if (key == "eta") cfg.eta = as_d();
  else if (key == "tau") cfg.tau = as_d();
  else if (key == "W_total") cfg.W_total = as_d();
  else if (key == "sigma2") cfg.sigma2 = as_d();
  else if (key == "sigma2_dbm") cfg.sigma2 = dbm_to_watt(as_d());
  else if (key == "gamma_min") cfg.gamma_min = as_d();
  else if (key == "gamma_min_db") cfg.gamma_min = db_to_linear(as_d());
  else if (key == "E_max_k") cfg.E_max_k = as_d();
  else if (key == "a_lo") cfg.a_lo = as_d();
  else if (key == "a_hi") cfg.a_hi = as_d();
  else if (key == "a_max") cfg.a_max = as_d();
  else if (key == "path_loss_exp") cfg.path_loss_exp = as_d();
  else if (key == "pb_x") cfg.pb_pos.x = as_d();
  else if (key == "pb_y") cfg.pb_pos.y = as_d();
  else if (key == "ap_x") cfg.ap_pos.x = as_d();
  else if (key == "ap_y") cfg.ap_pos.y = as_d();
  else if (key == "disk_radius") cfg.disk_radius = as_d();
  else if (key == "beta") cfg.beta = as_d();
  else if (key == "alpha_lo") cfg.alpha_lo = as_d();
  else if (key == "alpha_hi") cfg.alpha_hi = as_d();
  else if (key == "sca_tol") cfg.sca_tol = as_d();
  else if (key == "max_sca_iter") cfg.max_sca_iter = as_i();
  else if (key == "psi_floor") cfg.psi_floor = as_d();
  else if (key == "strict_margin") cfg.strict_margin = as_d();
  else if (key == "feas_tol") cfg.feas_tol = as_d();
  else if (key == "gap_tol") cfg.gap_tol = as_d();
  else if (key == "kkt_tol") cfg.kkt_tol = as_d();
  else if (key == "max_outer_iter") cfg.max_outer_iter = as_i();
  else if (key == "max_inner_iter") cfg.max_inner_iter = as_i();
  else if (key == "cap_service_to_backlog") cfg.cap_service_to_backlog = parse_bool(value);
  else if (key == "resample_topology") cfg.resample_topology = parse_bool(value);
  else if (key == "rng_seed") cfg.rng_seed = std::stoull(value);
  else throw std::invalid_argument("unknown config key: " + key);
}

SystemConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file: " + path);
  SystemConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    try {
      apply_config_line(cfg, key, value);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return validate_config(cfg);
}

std::string config_to_string(const SystemConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << "K = " << cfg.K << "\n"
     << "M = " << cfg.M << "\n"
     << "N = " << cfg.N << "\n"
     << "P_max = " << cfg.P_max << "\n"
     << "P_bar_k = " << cfg.P_bar_k << "\n"
     << "eta = " << cfg.eta << "\n"
     << "tau = " << cfg.tau << "\n"
     << "W_total = " << cfg.W_total << "\n"
     << "sigma2 = " << cfg.sigma2 << "\n"
     << "gamma_min = " << cfg.gamma_min << "\n"
     << "E_max_k = " << cfg.E_max_k << "\n"
     << "a_lo = " << cfg.a_lo << "\n"
     << "a_hi = " << cfg.a_hi << "\n"
     << "a_max = " << cfg.a_max << "\n"
     << "path_loss_exp = " << cfg.path_loss_exp << "\n"
     << "pb_x = " << cfg.pb_pos.x << "\n"
     << "pb_y = " << cfg.pb_pos.y << "\n"
     << "ap_x = " << cfg.ap_pos.x << "\n"
     << "ap_y = " << cfg.ap_pos.y << "\n"
     << "disk_radius = " << cfg.disk_radius << "\n"
     << "beta = " << cfg.beta << "\n"
     << "alpha_lo = " << cfg.alpha_lo << "\n"
     << "alpha_hi = " << cfg.alpha_hi << "\n"
     << "sca_tol = " << cfg.sca_tol << "\n"
     << "max_sca_iter = " << cfg.max_sca_iter << "\n"
     << "psi_floor = " << cfg.psi_floor << "\n"
     << "strict_margin = " << cfg.strict_margin << "\n"
     << "feas_tol = " << cfg.feas_tol << "\n"
     << "gap_tol = " << cfg.gap_tol << "\n"
     << "kkt_tol = " << cfg.kkt_tol << "\n"
     << "max_outer_iter = " << cfg.max_outer_iter << "\n"
     << "max_inner_iter = " << cfg.max_inner_iter << "\n"
     << "cap_service_to_backlog = " << (cfg.cap_service_to_backlog ? 1 : 0) << "\n"
     << "resample_topology = " << (cfg.resample_topology ? 1 : 0) << "\n"
     << "rng_seed = " << cfg.rng_seed << "\n";
  return os.str();
}

}  // namespace ehnet
