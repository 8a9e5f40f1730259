#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "orbitfl/csv.hpp"
#include "orbitfl/errors.hpp"
#include "orbitfl/sim.hpp"
#include "support.hpp"

using namespace orbitfl;
using namespace orbitfl::sim;
using test::max_rel_err;

namespace {

ScenarioConfig small(Protocol p, int epochs) {
  ScenarioConfig c;
  c.protocol = p;
  c.data.num_features = 24;
  c.data.samples_per_satellite = 20;
  c.data.test_samples = 200;
  c.max_epochs = epochs;
  c.horizon_s = 48 * 3600.0;
  return c;
}

// Global model after one round from w0, computed without the simulator.
learning::ModelParams centralized_round(const ScenarioConfig& c, const Workload& w, const learning::ModelParams& w0) {
  std::vector<double> sum(w0.dimension(), 0.0);
  std::int64_t total = 0;
  for (const auto& d : w.local) {
    const auto local = learning::local_gd(w0, d, c.learner);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += static_cast<double>(d.size()) * local[i];
    total += static_cast<std::int64_t>(d.size());
  }
  for (double& v : sum) v /= static_cast<double>(total);
  return learning::ModelParams(sum);
}

}  // namespace

TEST_CASE("runs are deterministic") {
  const auto c = small(Protocol::fedisl, 3);
  const auto a = run_scenario(c);
  const auto b = run_scenario(c);
  REQUIRE(a.records.size() == 3);
  CHECK(csv::metrics(a.records, c.seed) == csv::metrics(b.records, c.seed));
  CHECK(a.final_params == b.final_params);
  CHECK(a.events == b.events);

  auto other = c;
  other.seed = 2;
  CHECK(run_scenario(other).final_params != a.final_params);
}

TEST_CASE("both protocols compute the same global models") {
  const auto isl = small(Protocol::fedisl, 3);
  const auto non = small(Protocol::fednonisl, 3);
  const auto w = make_workload(isl);
  const auto a = run_scenario(isl, w, {.keep_epoch_params = true});
  const auto b = run_scenario(non, w, {.keep_epoch_params = true});
  REQUIRE(a.epoch_params.size() == 3);
  REQUIRE(b.epoch_params.size() == 3);

  learning::ModelParams expect(a.epoch_params[0].dimension());
  for (std::size_t e = 0; e < 3; ++e) {
    expect = centralized_round(isl, w, expect);
    CHECK(max_rel_err(a.epoch_params[e].vector(), expect.vector()) <= 1e-12);
    CHECK(max_rel_err(b.epoch_params[e].vector(), expect.vector()) <= 1e-12);
    CHECK(a.records[e].test_accuracy == doctest::Approx(b.records[e].test_accuracy).epsilon(1e-9));
  }
}

TEST_CASE("message counts per epoch") {
  const auto isl = small(Protocol::fedisl, 3);
  const auto non = small(Protocol::fednonisl, 3);
  const auto a = run_scenario(isl);
  const auto b = run_scenario(non);
  REQUIRE(a.records.size() == 3);
  REQUIRE(b.records.size() == 3);
  for (std::size_t e = 0; e < 3; ++e) {
    const auto n = static_cast<std::int64_t>(e + 1);
    CHECK(a.records[e].ps_down_msgs == 5 * n);
    CHECK(a.records[e].ps_up_msgs == 5 * n);
    CHECK(b.records[e].ps_down_msgs == 40 * n);
    CHECK(b.records[e].ps_up_msgs == 40 * n);
    CHECK(b.records[e].isl_msgs == 0);
    // Per plane: K distribution hops and K-1 aggregation hops.
    CHECK(a.records[e].isl_msgs - a.records[e].fallback_hops == 75 * n);
  }
  CHECK(ps_messages_per_epoch(b.records) / ps_messages_per_epoch(a.records) == 8.0);
  CHECK(a.records[0].ps_down_bits == 5 * isl.wire.model_bits(static_cast<std::int64_t>(a.final_params.dimension())));

  for (const auto* r : {&a, &b}) {
    CHECK(r->traffic.isl_sent == r->traffic.isl_arrived + r->traffic.isl_in_flight);
    CHECK(r->traffic.protocol_errors == 0);
  }
}

TEST_CASE("metrics are monotone") {
  const auto r = run_scenario(small(Protocol::fedisl, 4));
  REQUIRE(r.records.size() == 4);
  double elapsed = 0;
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    const auto& m = r.records[i];
    CHECK(m.epoch == static_cast<int>(i + 1));
    CHECK(m.epoch_duration_s > 0);
    elapsed += m.epoch_duration_s;
    CHECK(m.sim_time_s == doctest::Approx(elapsed).epsilon(1e-12));
    CHECK(m.test_accuracy >= 0);
    CHECK(m.test_accuracy <= 1);
    if (i > 0) {
      const auto& p = r.records[i - 1];
      CHECK(m.sim_time_s > p.sim_time_s);
      CHECK(m.ps_down_bits >= p.ps_down_bits);
      CHECK(m.ps_up_bits >= p.ps_up_bits);
      CHECK(m.isl_bits >= p.isl_bits);
    }
  }
  CHECK(r.end_time_s == r.records.back().sim_time_s);
}

TEST_CASE("comparison helpers") {
  std::vector<MetricsRecord> recs(3);
  recs[0] = {.sim_time_s = 10, .epoch = 1, .test_accuracy = 0.5, .epoch_duration_s = 10};
  recs[1] = {.sim_time_s = 30, .epoch = 2, .test_accuracy = 0.8, .epoch_duration_s = 20};
  recs[2] = {.sim_time_s = 60, .epoch = 3, .test_accuracy = 0.7, .ps_down_msgs = 4, .ps_up_msgs = 5, .epoch_duration_s = 30};
  CHECK(time_to_accuracy(recs, 0.8) == 30);
  CHECK(time_to_accuracy(recs, 0.5) == 10);
  CHECK_FALSE(time_to_accuracy(recs, 0.9));
  CHECK(ps_messages_per_epoch(recs) == 3.0);
  CHECK(ps_messages_per_epoch({}) == 0.0);
  CHECK(mean_epoch_duration(recs, 2) == 15.0);
  CHECK(mean_epoch_duration(recs, 10) == 20.0);
  CHECK(mean_epoch_duration(recs, 0) == 0.0);

  const auto c = small(Protocol::fedisl, 2);
  const auto cmp = compare(c, c, 0);
  REQUIRE(cmp.speedup);
  CHECK(*cmp.speedup == 1.0);
  CHECK(cmp.traffic_ratio == 1.0);
  CHECK(cmp.target_accuracy > 0);
}

TEST_CASE("contact table") {
  const ScenarioConfig c;
  const double h = 12 * 3600.0;
  const auto windows = contact_table(c, 0, h);
  std::map<orbital::NodeId, int> per_sat;
  for (const auto& w : windows) {
    CHECK(w.start_s >= 0);
    CHECK(w.end_s <= h + 1e-9);
    CHECK(w.start_s <= w.end_s);
    ++per_sat[w.node_a == orbital::kPsNode ? w.node_b : w.node_a];
  }
  CHECK(per_sat.size() == 40);
  CHECK(contact_table(c, 0, 0).empty());

  const auto con = make_constellation(c);
  const ContactPlan plan(con, 0, h);
  for (orbital::NodeId k = 1; k <= 40; ++k) {
    for (const auto& w : plan.windows(k)) {
      const double mid = 0.5 * (w.start_s + w.end_s);
      CHECK(plan.visible(k, mid));
      CHECK(plan.remaining_contact(k, mid) == doctest::Approx(w.end_s - mid));
      CHECK(plan.next_contact_start(k, mid) == mid);
    }
  }
}

TEST_CASE("scenario checks") {
  CHECK(validate_scenario(ScenarioConfig{}).empty());

  auto bad = small(Protocol::fedisl, 1);
  bad.data.train_images = "/nonexistent/train-images";
  bad.data.train_labels = "/nonexistent/train-labels";
  bad.data.synthetic_fallback = false;
  CHECK_THROWS_AS(make_workload(bad), ConfigError);

  auto sparse = small(Protocol::fedisl, 1);
  sparse.data.samples_per_satellite = 0;
  CHECK_THROWS_AS(validate(sparse), ConfigError);
}

TEST_CASE("ground station runs") {
  auto c = small(Protocol::fedisl, 1);
  c.ps.kind = PsKind::bremen;
  const auto r = run_scenario(c);
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].ps_up_msgs == 5);

  auto np = small(Protocol::fednonisl, 1);
  np.ps.kind = PsKind::north_pole;
  CHECK(run_scenario(np).records.size() == 1);
}

TEST_CASE("deadlock detection") {
  // Low-inclination orbits never rise above 10 degrees at the pole.
  auto unseen = small(Protocol::fedisl, 1);
  unseen.ps.kind = PsKind::north_pole;
  unseen.constellation.inclination_deg = 30;
  CHECK_THROWS_AS(run_scenario(unseen), DeadlockError);

  auto stalled = small(Protocol::fednonisl, 2);
  stalled.stall_limit_s = 600;
  CHECK_THROWS_AS(run_scenario(stalled), DeadlockError);
}
