#ifndef EHNET_PHY_HPP_
#define EHNET_PHY_HPP_

namespace ehnet::phy {

// Achievable rate as a function of transmit power; increasing and strictly
// concave in p_i.
struct RateFn {
  double w;        // bandwidth (Hz)
  double h_norm2;  // uplink squared channel norm
  double sigma2;   // noise power (W)
};

// Energy harvested in one frame: eta * tau * alpha * p_e * ||g||^2 (J).
double harvested_energy(double eta, double tau, double alpha, double p_e, double g_norm2);

// Linear SNR p_i * ||h||^2 / sigma^2.
double snr(double p_i, double h_norm2, double sigma2);

// w * log2(1 + snr), bit/s. Uses log1p so tiny SNRs near the minimum-power
// operating point keep full precision.
double throughput(const RateFn& fn, double p_i);

// d/dp_i of throughput, needed by solver gradients and checked against
// finite differences.
double throughput_derivative(const RateFn& fn, double p_i);

// Energy usable in the WIT phase: battery backlog plus fresh harvest.
double effective_energy(double E, double e);

// Smallest transmit power meeting the minimum SNR: gamma_min * sigma^2 / ||h||^2.
double min_power(double gamma_min, double sigma2, double h_norm2);

}  // namespace ehnet::phy

#endif  // EHNET_PHY_HPP_
