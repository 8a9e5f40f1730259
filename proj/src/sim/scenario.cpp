#include <algorithm>
#include <cmath>
#include <filesystem>

#include "orbitfl/errors.hpp"
#include "orbitfl/sim.hpp"

namespace orbitfl::sim {

using orbital::deg2rad;

const char* to_string(Protocol p) { return p == Protocol::fedisl ? "fedisl" : "fednonisl"; }

const char* to_string(PsKind k) {
  switch (k) {
    case PsKind::meo: return "meo";
    case PsKind::north_pole: return "north_pole";
    case PsKind::bremen: return "bremen";
    case PsKind::ground: return "ground";
  }
  return "?";
}

namespace {

void require(bool ok, const char* key, const std::string& what) {
  if (!ok) throw ConfigError(key, 0, what);
}

orbital::GroundStationSpec station(const PsConfig& ps) {
  double lat = ps.latitude_deg, lon = ps.longitude_deg;
  if (ps.kind == PsKind::north_pole) {
    lat = 90.0;
    lon = 0.0;
  } else if (ps.kind == PsKind::bremen) {
    lat = 53.08;
    lon = 8.80;
  }
  return {deg2rad(lat), deg2rad(lon), ps.station_altitude_km, deg2rad(ps.min_elevation_deg)};
}

}  // namespace

void validate(const ScenarioConfig& c) {
  const auto& k = c.constellation;
  require(k.planes >= 1, "constellation.planes", "must be at least 1");
  require(k.sats_per_plane >= 1, "constellation.sats_per_plane", "must be at least 1");
  require(k.altitude_km > 0, "constellation.altitude_km", "must be positive");
  require(k.inclination_deg >= 0 && k.inclination_deg <= 180, "constellation.inclination_deg",
          "must lie in [0, 180]");
  require(k.phasing >= 0, "constellation.phasing", "must be non-negative");

  if (c.ps.kind == PsKind::meo) {
    require(c.ps.altitude_km > 0, "ps.altitude_km", "must be positive");
  } else {
    require(std::abs(c.ps.latitude_deg) <= 90, "ps.latitude_deg", "must lie in [-90, 90]");
    require(c.ps.station_altitude_km >= 0, "ps.station_altitude_km", "must be non-negative");
  }
  require(c.ps.min_elevation_deg >= 0 && c.ps.min_elevation_deg < 90, "ps.min_elevation_deg",
          "must lie in [0, 90)");

  const auto& l = c.link;
  require(l.tx_power_w > 0, "link.tx_power_dbm", "power must be positive");
  require(l.tx_gain_linear > 0, "link.tx_gain_dbi", "gain must be positive");
  require(l.rx_gain_linear > 0, "link.rx_gain_dbi", "gain must be positive");
  require(l.bandwidth_hz > 0, "link.bandwidth_hz", "must be positive");
  require(l.noise_temp_k > 0, "link.noise_temp_k", "must be positive");
  require(l.carrier_hz > 0, "link.carrier_hz", "must be positive");
  require(l.tx_proc_delay_s >= 0, "link.tx_proc_delay_s", "must be non-negative");
  require(l.rx_proc_delay_s >= 0, "link.rx_proc_delay_s", "must be non-negative");
  require(l.rate_model != link::RateModel::constant || l.constant_rate_bps > 0, "link.constant_rate_bps",
          "must be positive with the constant rate model");
  require(c.wire.bits_per_param > 0, "link.bits_per_param", "must be positive");
  require(c.wire.header_bits >= 0, "link.header_bits", "must be non-negative");
  require(c.wire.control_bits > 0, "link.control_bits", "must be positive");

  require(c.learner.learning_rate > 0, "learning.learning_rate", "must be positive");
  require(c.learner.local_iterations >= 1, "learning.local_iterations", "must be at least 1");
  require(c.learner.cycles_per_sample > 0, "learning.cycles_per_sample", "must be positive");
  require(c.learner.cpu_hz > 0, "learning.cpu_hz", "must be positive");
  require(c.learner.compute_multiplier > 0, "learning.compute_multiplier", "must be positive");

  require(c.data.samples_per_satellite >= 1, "data.samples_per_satellite", "must be at least 1");
  require(c.data.test_samples >= 1, "data.test_samples", "must be at least 1");
  require(c.data.num_features >= 1, "data.num_features", "must be at least 1");
  require(c.data.num_classes >= 2, "data.num_classes", "must be at least 2");
  require(c.data.noise >= 0, "data.noise", "must be non-negative");
  require(c.data.nuisance_dims >= 0, "data.nuisance_dims", "must be non-negative");
  require(c.data.nuisance >= 0, "data.nuisance", "must be non-negative");
  require(c.data.train_images.empty() == c.data.train_labels.empty(), "data.train_labels",
          "images and labels must be given together");
  require(c.data.test_images.empty() == c.data.test_labels.empty(), "data.test_labels",
          "images and labels must be given together");

  require(c.options.reconnect_wait_s > 0, "protocol.reconnect_wait_s", "must be positive");
  require(c.options.grace_factor >= 0, "protocol.grace_factor", "must be non-negative");

  require(c.horizon_s > 0, "sim.horizon_hours", "must be positive");
  require(c.max_epochs >= 0, "sim.max_epochs", "must be non-negative");
  require(c.stall_limit_s > 0, "sim.stall_limit_hours", "must be positive");
}

orbital::Constellation make_constellation(const ScenarioConfig& c) {
  const auto& k = c.constellation;
  auto orbits = orbital::walker_delta(k.planes, k.sats_per_plane, k.altitude_km, deg2rad(k.inclination_deg),
                                      k.phasing);
  orbital::ParameterServerSpec ps;
  if (c.ps.kind == PsKind::meo) {
    orbital::OrbitSpec meo;
    meo.plane_index = -1;
    meo.altitude_km = c.ps.altitude_km;
    meo.inclination_rad = deg2rad(c.ps.inclination_deg);
    meo.raan_rad = deg2rad(c.ps.raan_deg);
    meo.num_satellites = 1;
    meo.phase_offset_rad = deg2rad(c.ps.phase_deg);
    ps.location = meo;
  } else {
    ps.location = station(c.ps);
  }
  return orbital::Constellation(std::move(orbits), ps, deg2rad(k.earth_angle0_deg));
}

std::vector<std::string> validate_scenario(const ScenarioConfig& c) {
  std::vector<std::string> problems;
  try {
    validate(c);
  } catch (const ConfigError& e) {
    problems.emplace_back(e.what());
    return problems;
  }
  const auto constellation = make_constellation(c);
  const double period = orbital::orbital_period(c.constellation.altitude_km);
  for (int p = 0; p < constellation.num_planes(); ++p) {
    for (orbital::NodeId id : constellation.plane_members(p)) {
      for (orbital::NodeId nb : constellation.neighbors(id)) {
        if (nb < id) continue;
        for (double t = 0; t <= period; t += 10.0) {
          if (!constellation.visible(id, nb, t)) {
            problems.push_back("ISL " + std::to_string(id) + "-" + std::to_string(nb) + " blocked at t=" +
                               std::to_string(t) + " s");
            break;
          }
        }
      }
    }
  }
  try {
    (void)make_workload(c);
  } catch (const std::exception& e) {
    problems.emplace_back(e.what());
  }
  return problems;
}

namespace {

bool files_present(const std::string& images, const std::string& labels) {
  return !images.empty() && std::filesystem::exists(images) && std::filesystem::exists(labels);
}

}  // namespace

Workload make_workload(const ScenarioConfig& c) {
  const int sats = c.constellation.planes * c.constellation.sats_per_plane;
  const std::size_t pool_size = static_cast<std::size_t>(sats) * c.data.samples_per_satellite;
  learning::SyntheticSpec spec{c.data.separation, c.data.noise, c.data.nuisance_dims, c.data.nuisance};

  Workload w;
  learning::Dataset pool;
  if (files_present(c.data.train_images, c.data.train_labels)) {
    pool = learning::load_idx(c.data.train_images, c.data.train_labels, c.data.num_classes, pool_size);
  } else if (c.data.synthetic_fallback) {
    pool = learning::synthetic_pool(pool_size, c.data.num_features, c.data.num_classes, c.seed, 0, spec);
  } else {
    throw ConfigError("data.train_images", 0,
                      c.data.train_images.empty() ? "no dataset configured and synthetic fallback disabled"
                                                  : "dataset files not found: " + c.data.train_images);
  }

  if (files_present(c.data.test_images, c.data.test_labels)) {
    w.test = learning::load_idx(c.data.test_images, c.data.test_labels, c.data.num_classes,
                                static_cast<std::size_t>(c.data.test_samples));
  } else if (c.data.synthetic_fallback && !files_present(c.data.train_images, c.data.train_labels)) {
    w.test = learning::synthetic_pool(c.data.test_samples, c.data.num_features, c.data.num_classes, c.seed, 1, spec);
  } else {
    throw ConfigError("data.test_images", 0, "test set missing");
  }

  learning::PartitionScheme scheme;
  if (c.data.split == Split::label_halves) {
    scheme = learning::half_label_split(sats, c.data.num_classes);
  } else {
    scheme.kind = learning::PartitionScheme::Kind::iid;
  }
  scheme.seed = c.seed;
  w.local = learning::partition_dataset(pool, sats, scheme);
  for (const auto& d : w.local) w.total_samples += static_cast<std::int64_t>(d.size());
  return w;
}

ContactPlan::ContactPlan(const orbital::Constellation& c, double from_t, double until_t,
                         orbital::ContactSearch search) {
  windows_.resize(c.num_satellites());
  for (orbital::NodeId sat = 1; sat <= c.num_satellites(); ++sat) {
    const auto vis = c.visibility(sat, orbital::kPsNode);
    auto& out = windows_[sat - 1];
    for (double t = from_t; t < until_t;) {
      auto w = orbital::next_contact(vis, t, until_t - t, search);
      if (!w) break;
      w->node_a = sat;
      w->node_b = orbital::kPsNode;
      out.push_back(*w);
      if (w->end_s >= until_t) break;
      t = w->end_s + search.tolerance_s;
    }
  }
}

const orbital::ContactWindow* ContactPlan::window_at(orbital::NodeId sat, double t) const {
  const auto& ws = windows_.at(sat - 1);
  auto it = std::upper_bound(ws.begin(), ws.end(), t,
                             [](double v, const orbital::ContactWindow& w) { return v < w.start_s; });
  if (it == ws.begin()) return nullptr;
  --it;
  return t <= it->end_s ? &*it : nullptr;
}

bool ContactPlan::visible(orbital::NodeId sat, double t) const { return window_at(sat, t) != nullptr; }

double ContactPlan::remaining_contact(orbital::NodeId sat, double t) const {
  const auto* w = window_at(sat, t);
  return w ? w->end_s - t : 0.0;
}

std::optional<double> ContactPlan::next_contact_start(orbital::NodeId sat, double t) const {
  if (visible(sat, t)) return t;
  const auto& ws = windows_.at(sat - 1);
  auto it = std::upper_bound(ws.begin(), ws.end(), t,
                             [](double v, const orbital::ContactWindow& w) { return v < w.start_s; });
  if (it == ws.end()) return std::nullopt;
  return it->start_s;
}

std::vector<orbital::ContactWindow> contact_table(const ScenarioConfig& config, double from_t,
                                                  double horizon_s) {
  if (!(horizon_s > 0)) return {};
  const auto c = make_constellation(config);
  ContactPlan plan(c, from_t, from_t + horizon_s);
  std::vector<orbital::ContactWindow> out;
  for (orbital::NodeId sat = 1; sat <= c.num_satellites(); ++sat)
    out.insert(out.end(), plan.windows(sat).begin(), plan.windows(sat).end());
  return out;
}

std::optional<double> time_to_accuracy(const std::vector<MetricsRecord>& records, double target) {
  for (const auto& r : records)
    if (r.test_accuracy >= target) return r.sim_time_s;
  return std::nullopt;
}

double ps_messages_per_epoch(const std::vector<MetricsRecord>& records) {
  if (records.empty()) return 0.0;
  const auto& last = records.back();
  return static_cast<double>(last.ps_down_msgs + last.ps_up_msgs) / static_cast<double>(records.size());
}

double mean_epoch_duration(const std::vector<MetricsRecord>& records, int epochs) {
  const std::size_t n = std::min(records.size(), static_cast<std::size_t>(std::max(epochs, 0)));
  if (n == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += records[i].epoch_duration_s;
  return sum / static_cast<double>(n);
}

}  // namespace orbitfl::sim
