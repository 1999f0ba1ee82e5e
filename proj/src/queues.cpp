#include "ehnet/queues.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ehnet::queues {

double update_data_queue(double q, double a, double tau, double r, double alpha) {
  return std::max(0.0, q + a * tau - r * (1.0 - alpha) * tau);
}

double update_energy_queue(double E, double e, double p_i, double alpha, double tau,
                           double E_max) {
  double spend = p_i * (1.0 - alpha) * tau;
  double next = E + e - spend;
  // Overspending means the energy-availability constraint was violated
  // upstream; only floating-point dust is tolerated.
  if (next < -1e-9 * std::max({1e-12, E, e, spend})) {
    throw std::logic_error("update_energy_queue: spend exceeds available energy");
  }
  return std::min(std::max(next, 0.0), E_max);
}

double lyapunov(const std::vector<double>& q, double tau) {
  double sum = 0.0;
  for (double qi : q) sum += qi * qi;
  return 0.5 * sum / (tau * tau);
}

double drift_upper_bound(const std::vector<double>& lambda, double tau, double L_t) {
  double sum = 0.0;
  for (double l : lambda) sum += l * l;
  return 0.5 * sum / (tau * tau) - L_t;
}

StabilityMetric stability_metric(const QueueTrace& trace) {
  if (trace.total_backlog.empty()) {
    throw std::invalid_argument("stability_metric: empty trace");
  }
  StabilityMetric m;
  for (double v : trace.total_backlog) {
    m.mean_total_backlog += v;
    m.max_total_backlog = std::max(m.max_total_backlog, v);
  }
  m.mean_total_backlog /= static_cast<double>(trace.total_backlog.size());
  return m;
}

}  // namespace ehnet::queues
