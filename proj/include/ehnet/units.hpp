#ifndef EHNET_UNITS_HPP_
#define EHNET_UNITS_HPP_

#include <cmath>
#include <stdexcept>

namespace ehnet {

// Power level conversions. Config files and the literature quote powers in
// dBm; everything internal is SI watts.
inline double dbm_to_watt(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }
inline double watt_to_dbm(double watt) {
  if (watt <= 0.0) throw std::invalid_argument("watt_to_dbm: power must be > 0");
  return 10.0 * std::log10(watt * 1e3);
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

// Scale factors between SI quantities and the units used inside the
// per-frame solver. Mixing 1e-13 W noise with 1e7 bit/s rates in one
// Hessian is hopeless; the solver works in Mbit, Mbit/s, us-scale energies
// and W, with conversions applied at module boundaries.
struct UnitScales {
  double rate_scale = 1e6;    // bit/s per internal rate unit (Mbit/s)
  double queue_scale = 1e6;   // bit per internal queue unit (Mbit)
  double power_scale = 1.0;   // W per internal power unit
  double energy_scale = 1e-6; // J per internal energy unit (uJ)

  double rate_to_internal(double bps) const { return bps / rate_scale; }
  double rate_to_si(double r) const { return r * rate_scale; }
  double queue_to_internal(double bits) const { return bits / queue_scale; }
  double queue_to_si(double q) const { return q * queue_scale; }
  double power_to_internal(double w) const { return w / power_scale; }
  double power_to_si(double p) const { return p * power_scale; }
  double energy_to_internal(double j) const { return j / energy_scale; }
  double energy_to_si(double e) const { return e * energy_scale; }

  bool valid() const {
    return rate_scale > 0 && queue_scale > 0 && power_scale > 0 && energy_scale > 0;
  }
};

// Frame duration unit for the drift penalty, in seconds. The drift term
// divides queue backlogs by the frame length; with backlogs in Mbit and the
// frame length in ms the drift and the beta-weighted utility are of
// comparable size over the beta range of interest, which is what makes the
// penalty weight an effective knob.
inline constexpr double kDriftTimeUnit = 1e-3;

}  // namespace ehnet

#endif  // EHNET_UNITS_HPP_
