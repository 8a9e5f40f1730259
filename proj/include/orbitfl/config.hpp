#pragma once

// INI-style scenario files.
//
//   [constellation]  planes sats_per_plane altitude_km inclination_deg phasing earth_angle0_deg
//   [ps]             kind (meo | north_pole | bremen | ground), altitude_km inclination_deg
//                    raan_deg phase_deg, latitude_deg longitude_deg station_altitude_km
//                    min_elevation_deg
//   [link]           tx_power_dbm | tx_power_w, tx_gain_dbi | tx_gain_linear, rx_gain_dbi |
//                    rx_gain_linear, bandwidth_hz noise_temp_k carrier_hz tx_proc_delay_s
//                    rx_proc_delay_s rate_model constant_rate_bps bits_per_param header_bits
//                    control_bits
//   [learning]       learning_rate local_iterations cycles_per_sample cpu_hz compute_multiplier
//                    init (zeros | random) train
//   [data]           train_images train_labels test_images test_labels synthetic_fallback
//                    samples_per_satellite test_samples num_features num_classes separation
//                    noise nuisance_dims nuisance split (iid | label_halves)
//   [protocol]       name (fedisl | fednonisl) reconnect_wait_s grace_factor
//   [sim]            horizon_hours | horizon_s, max_epochs, stall_limit_hours | stall_limit_s, seed
//
// Lines starting with '#' or ';' are comments. Omitted keys keep their defaults.

#include <string>
#include <string_view>

#include "orbitfl/sim.hpp"

namespace orbitfl::config {

/// Throws ConfigError naming the key and line of the first problem. The result
/// is validated.
sim::ScenarioConfig parse(std::string_view text);
sim::ScenarioConfig parse_file(const std::string& path);

/// Canonical form: every key, exact numbers; parse(emit(c)) == c.
std::string emit(const sim::ScenarioConfig& config);

}  // namespace orbitfl::config
