#include "orbitfl/orbital.hpp"

#include <algorithm>
#include <string>

#include "orbitfl/errors.hpp"

namespace orbitfl::orbital {

using namespace constants;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_altitude(double altitude_km) {
  if (!(altitude_km > 0.0))
    throw DomainError("altitude must be positive, got " + std::to_string(altitude_km) + " km");
}

// Bisects a visibility transition inside (lo, hi] where vis(lo) != vis(hi).
// Returns the bracket end on the visible side.
double refine(const VisibilityFn& vis, double lo, double hi, double tol) {
  const bool lo_visible = vis(lo);
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (vis(mid) == lo_visible)
      lo = mid;
    else
      hi = mid;
  }
  return lo_visible ? lo : hi;
}

}  // namespace

double orbital_speed(double altitude_km) {
  require_altitude(altitude_km);
  return std::sqrt(kGravParamM3S2 / ((altitude_km + kEarthRadiusKm) * 1e3));
}

double orbital_period(double altitude_km) {
  return kTwoPi * (kEarthRadiusKm + altitude_km) * 1e3 / orbital_speed(altitude_km);
}

PositionEci satellite_position(const OrbitSpec& orbit, int sat_index, double t_s) {
  if (sat_index < 0 || sat_index >= orbit.num_satellites)
    throw DomainError("satellite index " + std::to_string(sat_index) + " outside orbit of " +
                      std::to_string(orbit.num_satellites));
  const double r = kEarthRadiusKm + orbit.altitude_km;
  const double period = orbital_period(orbit.altitude_km);
  // Reduce the time term first so that t and t + T map to the same angle.
  const double cycles = std::fmod(t_s / period, 1.0);
  const double anomaly =
      orbit.phase_offset_rad + kTwoPi * sat_index / orbit.num_satellites + kTwoPi * cycles;
  const double cu = std::cos(anomaly), su = std::sin(anomaly);
  const double ci = std::cos(orbit.inclination_rad), si = std::sin(orbit.inclination_rad);
  const double co = std::cos(orbit.raan_rad), so = std::sin(orbit.raan_rad);
  return {r * (co * cu - so * ci * su), r * (so * cu + co * ci * su), r * si * su};
}

PositionEci ground_position(const GroundStationSpec& gs, double t_s, double earth_angle0_rad) {
  const double r = kEarthRadiusKm + gs.altitude_km;
  const double sidereal_day = kTwoPi / kEarthRotationRadS;
  const double lon = gs.longitude_rad + earth_angle0_rad + kTwoPi * std::fmod(t_s / sidereal_day, 1.0);
  const double cl = std::cos(gs.latitude_rad);
  return {r * cl * std::cos(lon), r * cl * std::sin(lon), r * std::sin(gs.latitude_rad)};
}

double isl_threshold_km(double altitude_a_km, double altitude_b_km) {
  const auto leg = [](double h) {
    const double rr = h + kEarthRadiusKm;
    return std::sqrt(rr * rr - kEarthRadiusKm * kEarthRadiusKm);
  };
  return leg(altitude_a_km) + leg(altitude_b_km);
}

bool sat_sat_visible(const PositionEci& a, const PositionEci& b, double altitude_a_km,
                     double altitude_b_km) {
  return (a - b).norm() < isl_threshold_km(altitude_a_km, altitude_b_km);
}

double elevation_rad(const PositionEci& sat, const PositionEci& gs) {
  const Vec3 los = sat - gs;
  // Angle between the local vertical and the line of sight, via atan2 for accuracy near 0 and pi.
  const double zenith = std::atan2(gs.cross(los).norm(), gs.dot(los));
  return std::numbers::pi / 2.0 - zenith;
}

bool sat_ground_visible(const PositionEci& sat, const PositionEci& gs, double min_elevation_rad) {
  return elevation_rad(sat, gs) >= min_elevation_rad;
}

std::optional<ContactWindow> next_contact(const VisibilityFn& visible, double from_t,
                                          double horizon_s, const ContactSearch& search) {
  if (!(horizon_s > 0.0)) return std::nullopt;
  const double limit = from_t + horizon_s;
  const double step = search.coarse_step_s;

  double start;
  if (visible(from_t)) {
    start = from_t;
  } else {
    double prev = from_t;
    for (;;) {
      if (prev >= limit) return std::nullopt;
      const double t = std::min(prev + step, limit);
      if (visible(t)) {
        start = refine(visible, prev, t, search.tolerance_s);
        break;
      }
      prev = t;
    }
  }

  double end = limit;
  for (double prev = start; prev < limit;) {
    const double t = std::min(prev + step, limit);
    if (!visible(t)) {
      end = refine(visible, prev, t, search.tolerance_s);
      break;
    }
    prev = t;
  }
  if (end <= start) end = std::min(limit, start + search.tolerance_s);
  return ContactWindow{0, 0, start, end};
}

double remaining_contact_time(const VisibilityFn& visible, double t, double horizon_s,
                              const ContactSearch& search) {
  if (!visible(t)) return 0.0;
  const auto w = next_contact(visible, t, horizon_s, search);
  return w ? w->end_s - t : 0.0;
}

Constellation::Constellation(std::vector<OrbitSpec> orbits, ParameterServerSpec ps,
                             double earth_angle0_rad)
    : orbits_(std::move(orbits)), ps_(std::move(ps)), earth_angle0_rad_(earth_angle0_rad) {
  int next = 1;
  for (const auto& o : orbits_) {
    if (o.num_satellites < 1) throw DomainError("orbit without satellites");
    require_altitude(o.altitude_km);
    first_id_.push_back(next);
    next += o.num_satellites;
  }
  total_ = next - 1;
  if (const auto* meo = std::get_if<OrbitSpec>(&ps_.location)) require_altitude(meo->altitude_km);
}

int Constellation::plane_of(NodeId id) const {
  if (!is_satellite(id)) throw DomainError("node " + std::to_string(id) + " is not a satellite");
  const auto it = std::upper_bound(first_id_.begin(), first_id_.end(), id);
  return static_cast<int>(it - first_id_.begin()) - 1;
}

int Constellation::index_in_plane(NodeId id) const { return id - first_id_[plane_of(id)]; }

NodeId Constellation::satellite_id(int plane, int index) const {
  return first_id_.at(plane) + index;
}

std::vector<NodeId> Constellation::plane_members(int plane) const {
  std::vector<NodeId> ids(orbits_.at(plane).num_satellites);
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = first_id_[plane] + static_cast<int>(i);
  return ids;
}

std::vector<NodeId> Constellation::neighbors(NodeId id) const {
  const int p = plane_of(id);
  const int k = orbits_[p].num_satellites;
  const int i = index_in_plane(id);
  if (k == 1) return {};
  const NodeId prev = first_id_[p] + (i + k - 1) % k;
  const NodeId next = first_id_[p] + (i + 1) % k;
  if (prev == next) return {prev};
  return {prev, next};
}

double Constellation::altitude_of(NodeId id) const {
  if (id == kPsNode) {
    if (const auto* meo = std::get_if<OrbitSpec>(&ps_.location)) return meo->altitude_km;
    return std::get<GroundStationSpec>(ps_.location).altitude_km;
  }
  return orbits_[plane_of(id)].altitude_km;
}

PositionEci Constellation::position(NodeId id, double t_s) const {
  if (id == kPsNode) {
    if (const auto* meo = std::get_if<OrbitSpec>(&ps_.location))
      return satellite_position(*meo, 0, t_s);
    return ground_position(std::get<GroundStationSpec>(ps_.location), t_s, earth_angle0_rad_);
  }
  const int p = plane_of(id);
  return satellite_position(orbits_[p], id - first_id_[p], t_s);
}

double Constellation::distance_km(NodeId a, NodeId b, double t_s) const {
  return (position(a, t_s) - position(b, t_s)).norm();
}

bool Constellation::visible(NodeId a, NodeId b, double t_s) const {
  if (a == b) return true;
  const bool ground_ps = !ps_.is_satellite();
  if (ground_ps && (a == kPsNode || b == kPsNode)) {
    const NodeId sat = a == kPsNode ? b : a;
    const auto& gs = std::get<GroundStationSpec>(ps_.location);
    return sat_ground_visible(position(sat, t_s), position(kPsNode, t_s), gs.min_elevation_rad);
  }
  return sat_sat_visible(position(a, t_s), position(b, t_s), altitude_of(a), altitude_of(b));
}

std::vector<OrbitSpec> walker_delta(int planes, int sats_per_plane, double altitude_km,
                                    double inclination_rad, int phasing_factor) {
  std::vector<OrbitSpec> out;
  out.reserve(planes);
  for (int p = 0; p < planes; ++p) {
    OrbitSpec o;
    o.plane_index = p;
    o.altitude_km = altitude_km;
    o.inclination_rad = inclination_rad;
    o.raan_rad = kTwoPi * p / planes;
    o.num_satellites = sats_per_plane;
    o.phase_offset_rad = std::fmod(kTwoPi * phasing_factor * p / (planes * sats_per_plane), kTwoPi);
    out.push_back(o);
  }
  return out;
}

}  // namespace orbitfl::orbital
