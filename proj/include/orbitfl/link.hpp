#pragma once

// Free-space link budget and transfer-time model for ISL and PS links.

#include <cmath>
#include <cstdint>

namespace orbitfl::link {

inline constexpr double kBoltzmann = 1.380649e-23;

enum class RateModel { shannon, constant };

struct LinkParams {
  double tx_power_w = 10.0;
  double tx_gain_linear = 4.988844874600123;  // 6.98 dBi
  double rx_gain_linear = 4.988844874600123;
  double bandwidth_hz = 20e6;
  double noise_temp_k = 354.81;
  double carrier_hz = 2.4e9;
  double tx_proc_delay_s = 0.0;
  double rx_proc_delay_s = 0.0;
  RateModel rate_model = RateModel::shannon;
  double constant_rate_bps = 0.0;  // used by RateModel::constant

  friend bool operator==(const LinkParams&, const LinkParams&) = default;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_watts(double dbm) { return db_to_linear(dbm - 30.0); }

/// Throws DomainError for non-positive distance.
double path_loss(double distance_m, double carrier_hz);

double snr(const LinkParams& params, double distance_m, bool visible);

double rate(const LinkParams& params, double distance_m, bool visible);

/// Eq.-10 style delay: transmission + propagation + processing.
/// Throws LinkUnavailable when the rate is zero, DomainError for empty payloads.
double transfer_time(const LinkParams& params, double distance_m, double payload_bits, bool visible);

/// Wire size of a model: 32-bit floats plus a fixed routing header.
struct WireFormat {
  std::int64_t bits_per_param = 32;
  std::int64_t header_bits = 256;
  std::int64_t control_bits = 512;

  std::int64_t model_bits(std::int64_t dimension) const {
    return dimension * bits_per_param + header_bits;
  }

  friend bool operator==(const WireFormat&, const WireFormat&) = default;
};

}  // namespace orbitfl::link
