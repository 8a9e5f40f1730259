#include "orbitfl/link.hpp"

#include <numbers>
#include <string>

#include "orbitfl/errors.hpp"
#include "orbitfl/orbital.hpp"

namespace orbitfl::link {

using orbital::constants::kSpeedOfLightMS;

double path_loss(double distance_m, double carrier_hz) {
  if (!(distance_m > 0.0))
    throw DomainError("path loss needs a positive distance, got " + std::to_string(distance_m));
  const double a = 4.0 * std::numbers::pi * carrier_hz * distance_m / kSpeedOfLightMS;
  return a * a;
}

double snr(const LinkParams& p, double distance_m, bool visible) {
  if (!visible) return 0.0;
  const double noise = kBoltzmann * p.noise_temp_k * p.bandwidth_hz;
  return p.tx_power_w * p.tx_gain_linear * p.rx_gain_linear /
         (noise * path_loss(distance_m, p.carrier_hz));
}

double rate(const LinkParams& p, double distance_m, bool visible) {
  if (!visible) return 0.0;
  if (p.rate_model == RateModel::constant) return p.constant_rate_bps;
  const double s = snr(p, distance_m, visible);
  if (s <= 0.0) return 0.0;
  return p.bandwidth_hz * std::log2(1.0 + s);
}

double transfer_time(const LinkParams& p, double distance_m, double payload_bits, bool visible) {
  if (!(payload_bits > 0.0)) throw DomainError("payload must be positive");
  const double r = rate(p, distance_m, visible);
  if (!(r > 0.0)) throw LinkUnavailable("link unavailable: zero rate");
  return payload_bits / r + distance_m / kSpeedOfLightMS + p.tx_proc_delay_s + p.rx_proc_delay_s;
}

}  // namespace orbitfl::link
