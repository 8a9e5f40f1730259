#pragma once

// Scenario description, the deterministic event-driven run of either protocol,
// PS contact tables and protocol comparison.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "orbitfl/learning.hpp"
#include "orbitfl/link.hpp"
#include "orbitfl/orbital.hpp"
#include "orbitfl/protocol.hpp"

namespace orbitfl::sim {

enum class Protocol { fedisl, fednonisl };

const char* to_string(Protocol p);

struct ConstellationConfig {
  int planes = 5;
  int sats_per_plane = 8;
  double altitude_km = 2000.0;
  double inclination_deg = 80.0;
  int phasing = 1;
  double earth_angle0_deg = 0.0;

  friend bool operator==(const ConstellationConfig&, const ConstellationConfig&) = default;
};

enum class PsKind { meo, north_pole, bremen, ground };

const char* to_string(PsKind k);

struct PsConfig {
  PsKind kind = PsKind::meo;
  // meo
  double altitude_km = 20000.0;
  double inclination_deg = 0.0;
  double raan_deg = 0.0;
  double phase_deg = 0.0;
  // ground (north_pole and bremen fix latitude/longitude)
  double latitude_deg = 0.0;
  double longitude_deg = 0.0;
  double station_altitude_km = 0.0;
  double min_elevation_deg = 10.0;

  friend bool operator==(const PsConfig&, const PsConfig&) = default;
};

enum class Split { iid, label_halves };

struct DataConfig {
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
  bool synthetic_fallback = true;
  int samples_per_satellite = 150;
  int test_samples = 1000;
  int num_features = 784;
  int num_classes = 10;
  double separation = 2.0;
  double noise = 0.5;
  int nuisance_dims = 8;
  double nuisance = 5.0;
  Split split = Split::label_halves;

  friend bool operator==(const DataConfig&, const DataConfig&) = default;
};

enum class InitKind { zeros, random };

struct ScenarioConfig {
  ConstellationConfig constellation;
  PsConfig ps;
  link::LinkParams link;
  link::WireFormat wire;
  learning::LearnerConfig learner;
  DataConfig data;
  protocol::ProtocolOptions options;
  Protocol protocol = Protocol::fedisl;
  InitKind init = InitKind::zeros;
  bool train = true;
  double horizon_s = 24 * 3600.0;
  int max_epochs = 0;                     // 0 = until the horizon
  double stall_limit_s = 48 * 3600.0;     // no epoch completes for this long -> deadlock
  std::uint64_t seed = 1;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Throws ConfigError naming the offending key.
void validate(const ScenarioConfig& config);

orbital::Constellation make_constellation(const ScenarioConfig& config);

/// Checks that every adjacent intra-plane pair can see each other over one
/// orbital period and that the data split leaves no satellite empty. Returns
/// the problems found (empty = fine).
std::vector<std::string> validate_scenario(const ScenarioConfig& config);

struct Workload {
  std::vector<learning::Dataset> local;  // index = satellite ID - 1
  learning::Dataset test;
  std::int64_t total_samples = 0;
};

/// Loads IDX files when configured (falling back to synthetic data only when
/// allowed) and splits them over the satellites. Throws ConfigError when the
/// dataset is missing and no fallback is enabled.
Workload make_workload(const ScenarioConfig& config);

struct MetricsRecord {
  double sim_time_s = 0;
  int epoch = 0;
  double test_accuracy = 0;
  double test_loss = 0;
  std::int64_t ps_down_msgs = 0;
  std::int64_t ps_down_bits = 0;
  std::int64_t ps_up_msgs = 0;
  std::int64_t ps_up_bits = 0;
  std::int64_t isl_msgs = 0;
  std::int64_t isl_bits = 0;
  std::int64_t fallback_hops = 0;
  double epoch_duration_s = 0;

  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

struct TrafficCounters {
  std::int64_t isl_sent = 0;
  std::int64_t isl_arrived = 0;
  std::int64_t isl_in_flight = 0;
  std::int64_t dropped = 0;          // duplicates and refused messages
  std::int64_t protocol_errors = 0;
  std::int64_t ps_control_msgs = 0;
  std::int64_t ps_control_bits = 0;
  std::int64_t ps_unreachable = 0;
};

struct RunResult {
  std::vector<MetricsRecord> records;  // one per completed epoch
  learning::Evaluation initial;
  learning::ModelParams final_params;
  std::vector<learning::ModelParams> epoch_params;  // global model after each epoch (when kept)
  TrafficCounters traffic;
  double end_time_s = 0;
  std::uint64_t events = 0;
};

struct RunOptions {
  bool keep_epoch_params = false;
};

/// Runs until max_epochs or the horizon. Throws DeadlockError when the event
/// queue runs dry or no epoch completes within stall_limit_s.
RunResult run_scenario(const ScenarioConfig& config, const Workload& workload, const RunOptions& options = {});
RunResult run_scenario(const ScenarioConfig& config);

/// PS contact windows of every satellite within [from_t, from_t + horizon_s].
std::vector<orbital::ContactWindow> contact_table(const ScenarioConfig& config, double from_t,
                                                  double horizon_s);

/// Pre-computed satellite-PS windows, answering the protocol's visibility
/// questions by lookup so that every query agrees with the scheduled contact
/// starts.
class ContactPlan final : public protocol::PsContactOracle {
 public:
  ContactPlan(const orbital::Constellation& c, double from_t, double until_t,
              orbital::ContactSearch search = {});

  bool visible(orbital::NodeId sat, double t) const override;
  double remaining_contact(orbital::NodeId sat, double t) const override;
  std::optional<double> next_contact_start(orbital::NodeId sat, double t) const override;

  const std::vector<orbital::ContactWindow>& windows(orbital::NodeId sat) const { return windows_.at(sat - 1); }

 private:
  const orbital::ContactWindow* window_at(orbital::NodeId sat, double t) const;

  std::vector<std::vector<orbital::ContactWindow>> windows_;
};

/// First record time with accuracy >= target, if any.
std::optional<double> time_to_accuracy(const std::vector<MetricsRecord>& records, double target);

/// Model-bearing PS messages per completed epoch.
double ps_messages_per_epoch(const std::vector<MetricsRecord>& records);

double mean_epoch_duration(const std::vector<MetricsRecord>& records, int epochs);

struct Comparison {
  double target_accuracy = 0;
  std::optional<double> time_a_s;
  std::optional<double> time_b_s;
  std::optional<double> speedup;  // time_a / time_b; empty if either never reached the target
  double traffic_ratio = 0;       // PS messages per epoch, a / b
  RunResult a;
  RunResult b;
};

/// Runs both scenarios (in parallel) and compares time-to-target. A target
/// <= 0 means 95% of the best accuracy run b reaches.
Comparison compare(const ScenarioConfig& a, const ScenarioConfig& b, double target_accuracy);

}  // namespace orbitfl::sim
