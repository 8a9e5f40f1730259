#pragma once

// Locale-independent CSV output for metrics, contact tables and comparisons.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "orbitfl/orbital.hpp"
#include "orbitfl/sim.hpp"

namespace orbitfl::csv {

inline constexpr const char* kMetricsHeader =
    "sim_time_s,epoch,test_accuracy,test_loss,ps_down_msgs,ps_down_bits,ps_up_msgs,ps_up_bits,"
    "isl_msgs,isl_bits,fallback_hops,epoch_duration_s";

/// Shortest round-trip decimal form of v.
std::string format(double v);

/// Header plus one row per record; with a seed, a leading "# seed=<n>" line.
std::string metrics(const std::vector<sim::MetricsRecord>& records, std::optional<std::uint64_t> seed = {});

std::string contacts(const orbital::Constellation& c, const std::vector<orbital::ContactWindow>& windows);

/// "speedup,traffic_ratio" plus one row; an unreached target is written as inf.
std::string comparison(const sim::Comparison& cmp);

/// Throws std::runtime_error when the file cannot be written.
void write_file(const std::string& path, const std::string& content);

}  // namespace orbitfl::csv
