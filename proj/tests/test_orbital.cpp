#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "orbitfl/errors.hpp"
#include "orbitfl/orbital.hpp"
#include "orbitfl/rng.hpp"
#include "support.hpp"

using namespace orbitfl;
using namespace orbitfl::orbital;
using test::rel_err;

// Reference values evaluated independently (Python, double precision) from
// r_E = 6371 km and mu = 3.98e14.
constexpr double kSpeed2000 = 6895.29521959232;
constexpr double kSpeed0 = 7903.832600028102;
constexpr double kPeriod2000 = 7627.888659060208;
constexpr double kPeriod20000 = 42650.90300048123;
constexpr double kChord8At2000Km = 6406.886024656334;
constexpr double kIslThresholdLeoLeo = 10859.834252878816;
constexpr double kIslThresholdLeoMeo = 31019.758861002752;

TEST_CASE("orbital speed and period") {
  CHECK(rel_err(orbital_speed(2000), kSpeed2000) < 1e-12);
  CHECK(rel_err(orbital_period(2000), kPeriod2000) < 1e-12);
  CHECK(rel_err(orbital_period(20000), kPeriod20000) < 1e-12);
  CHECK(orbital_speed(2000) > orbital_speed(20000));
  // Surface-orbit limit, just above zero since h > 0 is required.
  CHECK(rel_err(orbital_speed(1e-9), kSpeed0) < 1e-9);
  CHECK_THROWS_AS(orbital_speed(0), DomainError);
  CHECK_THROWS_AS(orbital_period(-5), DomainError);

  for (double h : {300.0, 2000.0, 20000.0}) {
    const double circumference = 2 * std::numbers::pi * (constants::kEarthRadiusKm + h) * 1e3;
    CHECK(rel_err(orbital_period(h) * orbital_speed(h), circumference) < 1e-14);
  }
}

TEST_CASE("satellite position") {
  OrbitSpec o{0, 2000, 0, 0, 8, 0};
  const auto p = satellite_position(o, 0, 0);
  CHECK(p.x == doctest::Approx(constants::kEarthRadiusKm + 2000).epsilon(1e-15));
  CHECK(std::abs(p.y) < 1e-9);
  CHECK(std::abs(p.z) < 1e-9);
  CHECK_THROWS_AS(satellite_position(o, 8, 0), DomainError);
  CHECK_THROWS_AS(satellite_position(o, -1, 0), DomainError);

  SUBCASE("radius preserved") {
    Rng rng(7);
    const auto orbits = walker_delta(5, 8, 2000, deg2rad(80));
    for (int n = 0; n < 10000; ++n) {
      const auto& orbit = orbits[rng.below(orbits.size())];
      const double t = rng.uniform() * 1e6;
      const auto r = satellite_position(orbit, static_cast<int>(rng.below(8)), t).norm();
      CHECK(rel_err(r, constants::kEarthRadiusKm + 2000) < 1e-6);
    }
  }

  SUBCASE("periodic") {
    OrbitSpec inclined{1, 2000, deg2rad(80), 1.2, 8, 0.3};
    const double period = orbital_period(2000);
    for (int k = 0; k < 8; ++k) {
      const auto a = satellite_position(inclined, k, 123.0);
      const auto b = satellite_position(inclined, k, 123.0 + period);
      CHECK((a - b).norm() / a.norm() < 1e-9);
    }
  }

  SUBCASE("adjacent chord is constant") {
    OrbitSpec inclined{2, 2000, deg2rad(80), 2.5, 8, 0.1};
    for (double t : {0.0, 1000.0, 5555.5, 86400.0}) {
      for (int k = 0; k < 8; ++k) {
        const double d = (satellite_position(inclined, k, t) - satellite_position(inclined, (k + 1) % 8, t)).norm();
        CHECK(rel_err(d, kChord8At2000Km) < 1e-9);
      }
    }
  }
}

TEST_CASE("walker delta pattern") {
  const auto orbits = walker_delta(5, 8, 2000, deg2rad(80), 1);
  REQUIRE(orbits.size() == 5);
  for (int p = 0; p < 5; ++p) {
    CHECK(orbits[p].plane_index == p);
    CHECK(orbits[p].raan_rad == doctest::Approx(2 * std::numbers::pi * p / 5));
    CHECK(orbits[p].phase_offset_rad == doctest::Approx(2 * std::numbers::pi * p / 40));
    CHECK(orbits[p].num_satellites == 8);
  }
  const auto f2 = walker_delta(5, 8, 2000, deg2rad(80), 2);
  CHECK(f2[1].phase_offset_rad == doctest::Approx(2 * std::numbers::pi * 2 / 40));
}

TEST_CASE("ground position") {
  const GroundStationSpec pole{deg2rad(90), 0, 0, deg2rad(10)};
  for (double t : {0.0, 1234.5, 86400.0}) {
    const auto p = ground_position(pole, t);
    CHECK(std::abs(p.x) < 1e-9);
    CHECK(std::abs(p.y) < 1e-9);
    CHECK(p.z == doctest::Approx(constants::kEarthRadiusKm));
  }
  const GroundStationSpec origin{0, 0, 0, 0};
  const auto p0 = ground_position(origin, 0);
  CHECK(p0.x == doctest::Approx(constants::kEarthRadiusKm));
  CHECK(std::abs(p0.y) < 1e-12);
  const auto day = ground_position(origin, 2 * std::numbers::pi / constants::kEarthRotationRadS);
  CHECK((day - p0).norm() / p0.norm() < 1e-9);
  // A quarter turn of the initial Earth angle moves (r_E, 0, 0) to (0, r_E, 0).
  const auto q = ground_position(origin, 0, std::numbers::pi / 2);
  CHECK(q.y == doctest::Approx(constants::kEarthRadiusKm));
}

TEST_CASE("inter-satellite visibility") {
  CHECK(rel_err(isl_threshold_km(2000, 2000), kIslThresholdLeoLeo) < 1e-12);
  CHECK(rel_err(isl_threshold_km(2000, 20000), kIslThresholdLeoMeo) < 1e-12);
  CHECK(isl_threshold_km(2100, 2000) > isl_threshold_km(2000, 2000));
  CHECK(isl_threshold_km(2000, 2100) > isl_threshold_km(2000, 2000));

  OrbitSpec o{0, 2000, deg2rad(80), 0, 8, 0};
  const auto a = satellite_position(o, 0, 0);
  CHECK(sat_sat_visible(a, satellite_position(o, 1, 0), 2000, 2000));
  CHECK_FALSE(sat_sat_visible(a, satellite_position(o, 4, 0), 2000, 2000));

  Rng rng(3);
  for (int n = 0; n < 1000; ++n) {
    const Vec3 p{rng.normal() * 9000, rng.normal() * 9000, rng.normal() * 9000};
    const Vec3 q{rng.normal() * 9000, rng.normal() * 9000, rng.normal() * 9000};
    CHECK(sat_sat_visible(p, q, 2000, 20000) == sat_sat_visible(q, p, 20000, 2000));
  }
}

namespace {

// Line of sight from the station to the satellite, tested by intersecting the
// segment with the Earth sphere: with a zero elevation mask the satellite is
// visible iff the segment only touches the sphere at the station itself.
bool segment_clears_earth(const Vec3& gs, const Vec3& sat) {
  const Vec3 d = sat - gs;
  const double a = d.dot(d);
  const double b = 2 * gs.dot(d);
  const double c = gs.dot(gs) - constants::kEarthRadiusKm * constants::kEarthRadiusKm;
  const double disc = b * b - 4 * a * c;
  if (disc <= 0) return true;
  const double s1 = (-b - std::sqrt(disc)) / (2 * a);
  const double s2 = (-b + std::sqrt(disc)) / (2 * a);
  // The station sits on the sphere, so one root is ~0; the other must not lie inside (0, 1].
  const double other = std::abs(s1) < std::abs(s2) ? s2 : s1;
  return other <= 1e-9;
}

}  // namespace

TEST_CASE("ground visibility") {
  const GroundStationSpec bremen{deg2rad(53.08), deg2rad(8.80), 0, deg2rad(10)};
  const auto gs = ground_position(bremen, 0);
  const auto zenith = 1.5 * gs;
  CHECK(elevation_rad(zenith, gs) == doctest::Approx(std::numbers::pi / 2));
  CHECK(sat_ground_visible(zenith, gs, deg2rad(89)));

  // A point on the horizon plane: gs plus a tangent direction.
  const Vec3 up = (1.0 / gs.norm()) * gs;
  Vec3 tangent = up.cross(Vec3{0, 0, 1});
  tangent = (1.0 / tangent.norm()) * tangent;
  const Vec3 horizon{gs.x + 3000 * tangent.x, gs.y + 3000 * tangent.y, gs.z + 3000 * tangent.z};
  CHECK(std::abs(elevation_rad(horizon, gs)) < 1e-9);
  CHECK_FALSE(sat_ground_visible(horizon, gs, deg2rad(10)));

  Rng rng(11);
  int agree = 0;
  for (int n = 0; n < 1000; ++n) {
    const GroundStationSpec s{std::asin(2 * rng.uniform() - 1), 2 * std::numbers::pi * rng.uniform(), 0, 0};
    const auto g = ground_position(s, 0);
    const double r = constants::kEarthRadiusKm + 200 + 30000 * rng.uniform();
    const double theta = std::acos(2 * rng.uniform() - 1);
    const double phi = 2 * std::numbers::pi * rng.uniform();
    const Vec3 sat{r * std::sin(theta) * std::cos(phi), r * std::sin(theta) * std::sin(phi), r * std::cos(theta)};
    agree += sat_ground_visible(sat, g, 0.0) == segment_clears_earth(g, sat);
  }
  CHECK(agree == 1000);
}

TEST_CASE("contact search") {
  Constellation c(walker_delta(5, 8, 2000, deg2rad(80)),
                  ParameterServerSpec{OrbitSpec{0, 20000, 0, 0, 1, 0}});

  SUBCASE("adjacent satellites are always in contact") {
    const auto w = next_contact(c.visibility(1, 2), 100, 86400);
    REQUIRE(w);
    CHECK(w->start_s == 100);
    CHECK(w->end_s == 100 + 86400);
    CHECK(remaining_contact_time(c.visibility(1, 2), 50, 3600) == 3600);
  }

  SUBCASE("open window starts at from_t; closed link gives zero remaining time") {
    const auto vis = c.visibility(1, kPsNode);
    double t = 0;
    while (!vis(t)) t += 10;
    const auto w = next_contact(vis, t, 43200);
    REQUIRE(w);
    CHECK(w->start_s == t);
    while (vis(t)) t += 10;
    CHECK(remaining_contact_time(vis, t, 43200) == 0);
  }

  SUBCASE("windows agree with a 1 s scan") {
    for (NodeId sat : {1, 9, 17, 25, 33, 40}) {
      const auto vis = c.visibility(sat, kPsNode);
      const auto scan = test::scan_windows(vis, 0, 43200, 1.0);
      const auto found = test::collect_windows(vis, 0, 43200);
      REQUIRE(scan.size() == found.size());
      for (std::size_t i = 0; i < scan.size(); ++i) {
        CHECK(std::abs(scan[i].first - found[i].start_s) <= 2.0);
        CHECK(std::abs(scan[i].second - found[i].end_s) <= 2.0);
      }
      for (double t = 0; t < 43200; t += 977) {
        if (!vis(t)) continue;
        const double r = remaining_contact_time(vis, t, 20000);
        double s = t;
        while (s < t + 20000 && vis(s + 1)) s += 1;
        CHECK(std::abs(r - (s - t)) <= 2.0);
      }
    }
  }

  CHECK_FALSE(next_contact([](double) { return false; }, 0, 1000));
}

TEST_CASE("constellation ids") {
  Constellation c(walker_delta(5, 8, 2000, deg2rad(80)),
                  ParameterServerSpec{GroundStationSpec{deg2rad(90), 0, 0, deg2rad(10)}});
  CHECK(c.num_satellites() == 40);
  CHECK(c.plane_of(1) == 0);
  CHECK(c.plane_of(8) == 0);
  CHECK(c.plane_of(9) == 1);
  CHECK(c.plane_of(40) == 4);
  CHECK(c.index_in_plane(10) == 1);
  CHECK(c.satellite_id(2, 3) == 20);
  CHECK(c.plane_members(1) == std::vector<NodeId>{9, 10, 11, 12, 13, 14, 15, 16});
  CHECK(c.neighbors(9) == std::vector<NodeId>{16, 10});
  CHECK_FALSE(c.is_satellite(kPsNode));
  CHECK_FALSE(c.is_satellite(41));

  // Planes are disjoint.
  std::set<NodeId> seen;
  for (int p = 0; p < 5; ++p)
    for (NodeId id : c.plane_members(p)) CHECK(seen.insert(id).second);
  CHECK(seen.size() == 40);

  for (int p = 0; p < 5; ++p) {
    const auto m = c.plane_members(p);
    for (std::size_t i = 0; i < m.size(); ++i)
      for (double t : {0.0, 3000.0, 50000.0}) CHECK(c.visible(m[i], m[(i + 1) % m.size()], t));
  }
}
