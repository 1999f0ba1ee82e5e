#include "ehnet/phy.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ehnet::phy {

double harvested_energy(double eta, double tau, double alpha, double p_e, double g_norm2) {
  if (eta < 0.0 || tau < 0.0 || alpha < 0.0 || p_e < 0.0 || g_norm2 < 0.0) {
    throw std::invalid_argument("harvested_energy: negative input");
  }
  return eta * tau * alpha * p_e * g_norm2;
}

double snr(double p_i, double h_norm2, double sigma2) {
  return p_i * h_norm2 / sigma2;
}

double throughput(const RateFn& fn, double p_i) {
  return fn.w * std::log1p(snr(p_i, fn.h_norm2, fn.sigma2)) / std::numbers::ln2;
}

double throughput_derivative(const RateFn& fn, double p_i) {
  double g = fn.h_norm2 / fn.sigma2;
  return fn.w * g / ((1.0 + g * p_i) * std::numbers::ln2);
}

double effective_energy(double E, double e) { return E + e; }

double min_power(double gamma_min, double sigma2, double h_norm2) {
  return gamma_min * sigma2 / h_norm2;
}

}  // namespace ehnet::phy
