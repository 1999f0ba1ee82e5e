#ifndef EHNET_STOCHASTIC_HPP_
#define EHNET_STOCHASTIC_HPP_

#include <string>
#include <utility>
#include <vector>

#include "ehnet/config.hpp"
#include "ehnet/rng.hpp"

namespace ehnet {

// Node geometry for one realization.
struct Topology {
  std::vector<Vec2> node_pos;
  std::vector<double> d_pb;  // node-to-beacon distance (m)
  std::vector<double> d_ap;  // node-to-access-point distance (m)
};

// Path loss with a 1 m reference-distance floor; gains never exceed 1.
double path_loss(double d, double exponent);

// K positions uniform over the placement disk (polar sampling with the
// area-correct radius law). Positions closer than 1 m to either endpoint are
// resampled.
Topology place_nodes(const SystemConfig& cfg, RngStream& rng);

// Per-frame squared channel norms: path loss times a sum of M (or N)
// unit-mean exponentials, i.e. squared magnitudes of unit-variance Rayleigh
// entries.
std::pair<std::vector<double>, std::vector<double>> sample_channels(
    const SystemConfig& cfg, const Topology& topo, RngStream& rng);

// I.i.d. uniform arrival rates on [a_lo, a_hi], clamped to a_max.
std::vector<double> draw_arrivals(const SystemConfig& cfg, RngStream& rng);

// Topology dump/load as CSV of node coordinates for repeatable geometries.
void save_topology_csv(const Topology& topo, const std::string& path);
Topology load_topology_csv(const std::string& path, const SystemConfig& cfg);

}  // namespace ehnet

#endif  // EHNET_STOCHASTIC_HPP_
