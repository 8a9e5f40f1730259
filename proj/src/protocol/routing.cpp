#include <algorithm>
#include <cstdlib>

#include "orbitfl/errors.hpp"
#include "orbitfl/protocol.hpp"

namespace orbitfl::protocol {

const char* to_string(MessageKind k) {
  switch (k) {
    case MessageKind::global_model: return "global_model";
    case MessageKind::partial_update: return "partial_update";
    case MessageKind::model_request: return "model_request";
    case MessageKind::wait_hint: return "wait_hint";
    case MessageKind::reconnect_hint: return "reconnect_hint";
    case MessageKind::ack: return "ack";
  }
  return "?";
}

Message control_message(MessageKind kind, int epoch, const link::WireFormat& wire) {
  Message m;
  m.kind = kind;
  m.epoch = epoch;
  m.size_bits = wire.control_bits;
  return m;
}

Message model_message(MessageKind kind, int epoch, ModelParams payload, const link::WireFormat& wire) {
  Message m;
  m.kind = kind;
  m.epoch = epoch;
  m.size_bits = wire.model_bits(static_cast<std::int64_t>(payload.dimension()));
  m.payload = std::move(payload);
  return m;
}

const std::vector<NodeId>& RoutingTree::children(NodeId id) const {
  static const std::vector<NodeId> kNone;
  const auto it = children_of.find(id);
  return it == children_of.end() ? kNone : it->second;
}

bool RoutingTree::is_child(NodeId child, NodeId parent) const {
  const auto it = parent_of.find(child);
  return it != parent_of.end() && it->second == parent;
}

int RoutingTree::hops_to_sink(NodeId id) const {
  int hops = 0;
  for (NodeId cur = id; cur != sink; ++hops) {
    const auto it = parent_of.find(cur);
    if (it == parent_of.end()) throw DomainError("node " + std::to_string(id) + " not in routing tree");
    cur = it->second;
  }
  return hops;
}

int RoutingTree::depth() const {
  int d = 0;
  for (const auto& [node, parent] : parent_of) d = std::max(d, hops_to_sink(node));
  return d;
}

RoutingTree build_routing_tree(int plane, std::span<const NodeId> ring, NodeId sink) {
  const auto sink_it = std::find(ring.begin(), ring.end(), sink);
  if (sink_it == ring.end())
    throw DomainError("sink " + std::to_string(sink) + " is not in plane " + std::to_string(plane));
  const int k = static_cast<int>(ring.size());
  const int s = static_cast<int>(sink_it - ring.begin());
  const auto ring_distance = [&](int i) {
    const int d = std::abs(i - s);
    return std::min(d, k - d);
  };

  RoutingTree tree;
  tree.plane = plane;
  tree.sink = sink;
  tree.children_of[sink];
  for (int i = 0; i < k; ++i) {
    if (i == s) continue;
    const int want = ring_distance(i) - 1;
    NodeId parent = -1;
    for (int j : {(i + k - 1) % k, (i + 1) % k}) {
      if (ring_distance(j) != want) continue;
      if (parent < 0 || ring[j] < parent) parent = ring[j];
    }
    tree.parent_of[ring[i]] = parent;
    tree.children_of[parent].push_back(ring[i]);
  }
  for (auto& [node, kids] : tree.children_of) std::sort(kids.begin(), kids.end());
  return tree;
}

bool DirectContactOracle::visible(NodeId sat, double t) const {
  return constellation_.visible(sat, orbital::kPsNode, t);
}

double DirectContactOracle::remaining_contact(NodeId sat, double t) const {
  return orbital::remaining_contact_time(constellation_.visibility(sat, orbital::kPsNode), t,
                                         horizon_s_, search_);
}

std::optional<double> DirectContactOracle::next_contact_start(NodeId sat, double t) const {
  const auto w = orbital::next_contact(constellation_.visibility(sat, orbital::kPsNode), t,
                                       horizon_s_, search_);
  if (!w) return std::nullopt;
  return w->start_s;
}

double estimate_aggregation_time(int sats_in_plane, double max_hop_time_s, double max_compute_time_s) {
  const int half = sats_in_plane / 2;
  return half * max_hop_time_s + max_compute_time_s + half * max_hop_time_s;
}

AggregationEstimate estimate_aggregation_time(const orbital::Constellation& c, int plane, double t,
                                              const link::LinkParams& link, std::int64_t model_bits,
                                              std::span<const double> compute_times_s) {
  AggregationEstimate e;
  const auto members = c.plane_members(plane);
  for (NodeId k : members) {
    for (NodeId i : c.neighbors(k)) {
      const double d_m = c.distance_km(k, i, t) * 1e3;
      e.max_hop_time_s = std::max(
          e.max_hop_time_s, link::transfer_time(link, d_m, static_cast<double>(model_bits), c.visible(k, i, t)));
    }
  }
  for (double tl : compute_times_s) e.max_compute_time_s = std::max(e.max_compute_time_s, tl);
  e.total_s = estimate_aggregation_time(static_cast<int>(members.size()), e.max_hop_time_s,
                                        e.max_compute_time_s);
  return e;
}

NodeId select_sink(std::span<const NodeId> unordered, double decision_t, const PsContactOracle& oracle) {
  if (unordered.empty()) throw DomainError("select_sink on an empty plane");
  std::vector<NodeId> members(unordered.begin(), unordered.end());
  std::sort(members.begin(), members.end());
  std::optional<NodeId> best;
  double best_remaining = -1.0;
  for (NodeId k : members) {  // ascending, so strict > keeps the smallest ID on ties
    if (!oracle.visible(k, decision_t)) continue;
    const double r = oracle.remaining_contact(k, decision_t);
    if (r > best_remaining) {
      best_remaining = r;
      best = k;
    }
  }
  if (best) return *best;

  double soonest = 0;
  for (NodeId k : members) {
    const auto start = oracle.next_contact_start(k, decision_t);
    if (start && (!best || *start < soonest)) {
      soonest = *start;
      best = k;
    }
  }
  return best ? *best : members.front();
}

}  // namespace orbitfl::protocol
