#include "orbitfl/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace orbitfl::csv {

std::string format(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string metrics(const std::vector<sim::MetricsRecord>& records, std::optional<std::uint64_t> seed) {
  std::string out;
  if (seed) out += "# seed=" + std::to_string(*seed) + "\n";
  out += kMetricsHeader;
  out += '\n';
  for (const auto& r : records) {
    out += format(r.sim_time_s) + ',' + std::to_string(r.epoch) + ',' + format(r.test_accuracy) + ',' +
           format(r.test_loss) + ',' + std::to_string(r.ps_down_msgs) + ',' + std::to_string(r.ps_down_bits) + ',' +
           std::to_string(r.ps_up_msgs) + ',' + std::to_string(r.ps_up_bits) + ',' + std::to_string(r.isl_msgs) +
           ',' + std::to_string(r.isl_bits) + ',' + std::to_string(r.fallback_hops) + ',' +
           format(r.epoch_duration_s) + '\n';
  }
  return out;
}

std::string contacts(const orbital::Constellation& c, const std::vector<orbital::ContactWindow>& windows) {
  std::string out = "satellite_id,plane,start_s,end_s,duration_s\n";
  for (const auto& w : windows) {
    const auto sat = w.node_a == orbital::kPsNode ? w.node_b : w.node_a;
    out += std::to_string(sat) + ',' + std::to_string(c.plane_of(sat)) + ',' + format(w.start_s) + ',' +
           format(w.end_s) + ',' + format(w.duration_s()) + '\n';
  }
  return out;
}

std::string comparison(const sim::Comparison& cmp) {
  const double speedup = cmp.speedup ? *cmp.speedup : INFINITY;
  return "speedup,traffic_ratio\n" + format(speedup) + ',' + format(cmp.traffic_ratio) + '\n';
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << content;
  if (!out.flush()) throw std::runtime_error("write to " + path + " failed");
}

}  // namespace orbitfl::csv
