#include "ehnet/stochastic.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace ehnet {

namespace {
constexpr double kRefDistance = 1.0;  // path-loss reference distance (m)

double dist(const Vec2& a, const Vec2& b) { return std::hypot(a.x - b.x, a.y - b.y); }
}  // namespace

double path_loss(double d, double exponent) {
  return std::pow(std::max(d, kRefDistance), -exponent);
}

Topology place_nodes(const SystemConfig& cfg, RngStream& rng) {
  Topology topo;
  topo.node_pos.reserve(cfg.K);
  topo.d_pb.reserve(cfg.K);
  topo.d_ap.reserve(cfg.K);
  for (int k = 0; k < cfg.K; ++k) {
    for (;;) {
      double r = cfg.disk_radius * std::sqrt(rng.uniform01());
      double theta = 2.0 * std::numbers::pi * rng.uniform01();
      Vec2 pos{cfg.ap_pos.x + r * std::cos(theta), cfg.ap_pos.y + r * std::sin(theta)};
      double d_ap = dist(pos, cfg.ap_pos);
      double d_pb = dist(pos, cfg.pb_pos);
      // Degenerate placements inside the reference distance are resampled.
      if (d_ap < kRefDistance || d_pb < kRefDistance) continue;
      topo.node_pos.push_back(pos);
      topo.d_pb.push_back(d_pb);
      topo.d_ap.push_back(d_ap);
      break;
    }
  }
  return topo;
}

std::pair<std::vector<double>, std::vector<double>> sample_channels(
    const SystemConfig& cfg, const Topology& topo, RngStream& rng) {
  std::vector<double> g(cfg.K), h(cfg.K);
  for (int k = 0; k < cfg.K; ++k) {
    double sum_g = 0.0;
    for (int m = 0; m < cfg.M; ++m) sum_g += rng.exponential();
    g[k] = path_loss(topo.d_pb[k], cfg.path_loss_exp) * sum_g;
    double sum_h = 0.0;
    for (int n = 0; n < cfg.N; ++n) sum_h += rng.exponential();
    h[k] = path_loss(topo.d_ap[k], cfg.path_loss_exp) * sum_h;
  }
  return {std::move(g), std::move(h)};
}

std::vector<double> draw_arrivals(const SystemConfig& cfg, RngStream& rng) {
  std::vector<double> a(cfg.K);
  for (int k = 0; k < cfg.K; ++k) {
    a[k] = std::min(rng.uniform(cfg.a_lo, cfg.a_hi), cfg.a_max);
  }
  return a;
}

void save_topology_csv(const Topology& topo, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write topology file: " + path);
  out << "x,y\n";
  out.precision(17);
  for (const auto& p : topo.node_pos) out << p.x << "," << p.y << "\n";
}

Topology load_topology_csv(const std::string& path, const SystemConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read topology file: " + path);
  std::string line;
  std::getline(in, line);  // header
  Topology topo;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string sx, sy;
    if (!std::getline(ls, sx, ',') || !std::getline(ls, sy)) {
      throw std::runtime_error("malformed topology row: " + line);
    }
    Vec2 pos{std::stod(sx), std::stod(sy)};
    topo.node_pos.push_back(pos);
    topo.d_pb.push_back(std::hypot(pos.x - cfg.pb_pos.x, pos.y - cfg.pb_pos.y));
    topo.d_ap.push_back(std::hypot(pos.x - cfg.ap_pos.x, pos.y - cfg.ap_pos.y));
  }
  if (static_cast<int>(topo.node_pos.size()) != cfg.K) {
    throw std::runtime_error("topology file node count does not match K");
  }
  return topo;
}

}  // namespace ehnet
