#ifndef EHNET_FRAME_HPP_
#define EHNET_FRAME_HPP_

#include <vector>

namespace ehnet {

// Random state observed at the start of frame t plus the carried-over queue
// backlogs. Gains and arrivals are quasi-static: drawn once per frame and
// immutable while the frame is optimized.
struct FrameState {
  int t = 0;
  std::vector<double> g_norm2;  // downlink channel squared norms, per node
  std::vector<double> h_norm2;  // uplink channel squared norms, per node
  std::vector<double> a;        // arrival rates (bit/s)
  std::vector<double> q;        // data backlogs (bit)
  std::vector<double> E;        // energy backlogs (J)
};

// Decision variables for one frame.
struct Allocation {
  std::vector<double> p_e;    // beacon power toward node k (W)
  std::vector<double> p_i;    // node transmit power (W)
  std::vector<double> alpha;  // harvest-time fraction
};

// Auxiliary optimization variables carried per SCA iterate, scaled queue
// units for lambda/psi.
struct SlackState {
  std::vector<double> lambda;     // queue-bound slack (scaled queue units)
  std::vector<double> psi;        // backlog-deficit slack (scaled queue units)
  std::vector<double> alpha_hat;  // inverse-time slack, >= 1/(1-alpha)
};

}  // namespace ehnet

#endif  // EHNET_FRAME_HPP_
