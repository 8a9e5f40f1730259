#pragma once

// Circular two-body geometry for a Walker constellation, a parameter server
// (MEO satellite or ground station) and the visibility predicates between them.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <variant>
#include <vector>

namespace orbitfl::orbital {

namespace constants {
inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kGravParamM3S2 = 3.98e14;
inline constexpr double kEarthRotationRadS = 7.2921159e-5;
inline constexpr double kSpeedOfLightMS = 299792458.0;
}  // namespace constants

using NodeId = std::int32_t;

/// Satellites are numbered 1..K in plane order; the parameter server is 0.
inline constexpr NodeId kPsNode = 0;

struct Vec3 {
  double x = 0, y = 0, z = 0;

  friend Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, const Vec3& a) { return {s * a.x, s * a.y, s * a.z}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
};

/// ECI position in km.
using PositionEci = Vec3;

struct OrbitSpec {
  int plane_index = 0;
  double altitude_km = 0;
  double inclination_rad = 0;
  double raan_rad = 0;
  int num_satellites = 1;
  double phase_offset_rad = 0;
};

struct GroundStationSpec {
  double latitude_rad = 0;
  double longitude_rad = 0;
  double altitude_km = 0;
  double min_elevation_rad = 0;
};

struct ContactWindow {
  NodeId node_a = 0;
  NodeId node_b = 0;
  double start_s = 0;
  double end_s = 0;

  double duration_s() const { return end_s - start_s; }
};

struct ContactSearch {
  double coarse_step_s = 10.0;
  double tolerance_s = 0.1;
};

// Throws DomainError for non-positive altitude.
double orbital_speed(double altitude_km);
double orbital_period(double altitude_km);

/// Throws DomainError when sat_index is outside [0, num_satellites).
PositionEci satellite_position(const OrbitSpec& orbit, int sat_index, double t_s);

PositionEci ground_position(const GroundStationSpec& gs, double t_s, double earth_angle0_rad = 0.0);

/// Earth-obstruction distance threshold between two satellites (km).
double isl_threshold_km(double altitude_a_km, double altitude_b_km);

bool sat_sat_visible(const PositionEci& a, const PositionEci& b, double altitude_a_km,
                     double altitude_b_km);

/// Elevation of `sat` above the local horizon at `gs`, in radians.
double elevation_rad(const PositionEci& sat, const PositionEci& gs);

bool sat_ground_visible(const PositionEci& sat, const PositionEci& gs, double min_elevation_rad);

using VisibilityFn = std::function<bool(double)>;

/// Earliest window starting at or after from_t within [from_t, from_t + horizon_s].
/// A window open at from_t starts at from_t; a window still open at the horizon
/// ends at the horizon.
std::optional<ContactWindow> next_contact(const VisibilityFn& visible, double from_t,
                                          double horizon_s, const ContactSearch& search = {});

/// Length of the visible stretch starting at t, clamped to horizon_s; 0 if not visible.
double remaining_contact_time(const VisibilityFn& visible, double t, double horizon_s,
                              const ContactSearch& search = {});

struct ParameterServerSpec {
  std::variant<OrbitSpec, GroundStationSpec> location;

  bool is_satellite() const { return std::holds_alternative<OrbitSpec>(location); }
};

/// All nodes of a scenario. Satellite IDs are 1..K, plane by plane, ring order
/// within each plane; the PS has ID kPsNode.
class Constellation {
 public:
  Constellation(std::vector<OrbitSpec> orbits, ParameterServerSpec ps, double earth_angle0_rad = 0.0);

  const std::vector<OrbitSpec>& orbits() const { return orbits_; }
  const ParameterServerSpec& ps() const { return ps_; }
  int num_planes() const { return static_cast<int>(orbits_.size()); }
  int num_satellites() const { return total_; }

  bool is_satellite(NodeId id) const { return id >= 1 && id <= total_; }
  int plane_of(NodeId id) const;
  int index_in_plane(NodeId id) const;
  NodeId satellite_id(int plane, int index) const;
  /// IDs of one plane in ring order.
  std::vector<NodeId> plane_members(int plane) const;
  /// Ring neighbours (one entry for a two-satellite ring, none for a single satellite).
  std::vector<NodeId> neighbors(NodeId id) const;

  PositionEci position(NodeId id, double t_s) const;
  double distance_km(NodeId a, NodeId b, double t_s) const;
  bool visible(NodeId a, NodeId b, double t_s) const;

  VisibilityFn visibility(NodeId a, NodeId b) const {
    return [this, a, b](double t) { return visible(a, b, t); };
  }

 private:
  double altitude_of(NodeId id) const;

  std::vector<OrbitSpec> orbits_;
  std::vector<int> first_id_;
  ParameterServerSpec ps_;
  double earth_angle0_rad_;
  int total_ = 0;
};

/// Walker delta pattern: RAAN of plane p is 2*pi*p/P and the in-plane phase
/// offset is 2*pi*F*p/(P*K).
std::vector<OrbitSpec> walker_delta(int planes, int sats_per_plane, double altitude_km,
                                    double inclination_rad, int phasing_factor = 1);

inline constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

}  // namespace orbitfl::orbital
