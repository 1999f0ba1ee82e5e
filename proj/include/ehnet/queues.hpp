#ifndef EHNET_QUEUES_HPP_
#define EHNET_QUEUES_HPP_

#include <cstddef>
#include <utility>
#include <vector>

namespace ehnet::queues {

// Per-episode queue trajectories, SI units.
struct QueueTrace {
  std::vector<std::vector<double>> q;  // [frame][node] data backlog (bit)
  std::vector<std::vector<double>> E;  // [frame][node] energy backlog (J)
  std::vector<std::vector<double>> served_bits;
  std::vector<std::vector<double>> harvested_j;
  std::vector<double> total_backlog;   // ||q[t]||_1 per frame
};

// q_next = max{0, q + a*tau - r*(1-alpha)*tau}. Service is not capped by
// backlog; the positive part absorbs wasted service.
double update_data_queue(double q, double a, double tau, double r, double alpha);

// E_next = min{E + e - p_i*(1-alpha)*tau, E_max}. Spending more energy than
// available signals a constraint violation upstream and throws; it is not
// silently clamped.
double update_energy_queue(double E, double e, double p_i, double alpha, double tau,
                           double E_max);

// Quadratic queue potential (1/2) sum_k q_k^2 / tau^2.
double lyapunov(const std::vector<double>& q, double tau);

// Slack-variable drift bound (1/2) sum_k lambda_k^2 / tau^2 - L_t. Upper
// bounds the true drift whenever q[t+1] <= lambda componentwise.
double drift_upper_bound(const std::vector<double>& lambda, double tau, double L_t);

// Empirical stability statistics: time-averaged and maximum total backlog.
struct StabilityMetric {
  double mean_total_backlog = 0.0;
  double max_total_backlog = 0.0;
};
StabilityMetric stability_metric(const QueueTrace& trace);

}  // namespace ehnet::queues

#endif  // EHNET_QUEUES_HPP_
