#include <algorithm>
#include <future>

#include "orbitfl/sim.hpp"

namespace orbitfl::sim {

Comparison compare(const ScenarioConfig& a, const ScenarioConfig& b, double target_accuracy) {
  validate(a);
  validate(b);
  auto run = [](const ScenarioConfig& c) { return run_scenario(c); };
  auto fa = std::async(std::launch::async, run, std::cref(a));
  auto fb = std::async(std::launch::async, run, std::cref(b));

  Comparison out;
  out.b = fb.get();
  out.a = fa.get();

  out.target_accuracy = target_accuracy;
  if (!(target_accuracy > 0)) {
    double best = out.b.initial.accuracy;
    for (const auto& r : out.b.records) best = std::max(best, r.test_accuracy);
    out.target_accuracy = 0.95 * best;
  }
  out.time_a_s = time_to_accuracy(out.a.records, out.target_accuracy);
  out.time_b_s = time_to_accuracy(out.b.records, out.target_accuracy);
  if (out.time_a_s && out.time_b_s && *out.time_b_s > 0) out.speedup = *out.time_a_s / *out.time_b_s;

  const double per_b = ps_messages_per_epoch(out.b.records);
  if (per_b > 0) out.traffic_ratio = ps_messages_per_epoch(out.a.records) / per_b;
  return out;
}

}  // namespace orbitfl::sim
