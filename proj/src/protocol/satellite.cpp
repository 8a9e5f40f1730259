#include <algorithm>
#include <limits>

#include "orbitfl/protocol.hpp"

namespace orbitfl::protocol {

namespace {

class Machine {
 public:
  Machine(SatState& s, const SatelliteEnv& env, double t) : s_(s), env_(env), t_(t) {}

  std::vector<SatAction> take() { return std::move(out_); }

  void on(const event::PsContactStart&) {
    s_.requests_paused = false;
    try_connect();
  }

  void on(const event::Timer& e) {
    if (!s_.timer_armed || e.token != s_.timer_token) return;  // superseded
    s_.timer_armed = false;
    try_connect();
  }

  void on(const event::PsUnreachable& e) {
    s_.connecting = false;
    // Model requests wait for the next contact start; uploads are re-routed.
    if (e.request.kind == MessageKind::partial_update) try_connect();
  }

  void on(const event::PsReply& e) {
    s_.connecting = false;
    if (e.request.kind == MessageKind::model_request) {
      switch (e.verdict) {
        case PsVerdict::send_model:
          accept_model(e.response, orbital::kPsNode);
          break;
        case PsVerdict::reconnect:
          arm_timer(t_ + env_.options().reconnect_wait_s);
          break;
        default:
          s_.requests_paused = true;
          break;
      }
    } else if (e.request.kind == MessageKind::partial_update && !s_.uploads.empty()) {
      switch (e.verdict) {
        case PsVerdict::accept_update:
          s_.uploads.pop_front();
          break;
        case PsVerdict::reconnect:
        case PsVerdict::wait:
          arm_timer(t_ + env_.options().reconnect_wait_s);
          break;
        default:
          out_.push_back(action::Dropped{orbital::kPsNode, s_.uploads.front(), "PS refused orbit aggregate",
                                         e.response.kind != MessageKind::ack});
          s_.uploads.pop_front();
          break;
      }
    }
    try_connect();
  }

  void on(const event::IslArrival& e) {
    const Message& m = e.msg;
    if (m.kind == MessageKind::global_model) {
      if (m.epoch == s_.epoch && s_.phase == SatPhase::distribution && !s_.has_model) {
        accept_model(m, e.from);
      } else {
        if (m.epoch == s_.epoch) s_.model_from.insert(e.from);
        drop(e, "duplicate global model", false);
      }
      return;
    }
    if (m.kind != MessageKind::partial_update) {
      drop(e, "unexpected message on ISL", true);
      return;
    }
    if (m.sink == kFallbackSink) {
      Message carried = m;
      carried.origin = e.from;
      s_.uploads.push_back(std::move(carried));
      try_connect();
      return;
    }
    if (m.epoch != s_.epoch) {
      drop(e, "partial update for epoch " + std::to_string(m.epoch), true);
      return;
    }
    if (!s_.global.values().empty() && m.payload.dimension() != s_.global.dimension()) {
      drop(e, "partial update dimension mismatch", true);
      return;
    }
    if (s_.cache.contains(e.from)) {
      drop(e, "duplicate partial update", true);
      return;
    }
    if (s_.phase == SatPhase::aggregation && !s_.tree->is_child(e.from, s_.id)) {
      drop(e, "partial update from non-child", true);
      return;
    }
    // Early updates are cached until the local computation finishes.
    s_.cache.emplace(e.from, m);
    if (s_.phase == SatPhase::aggregation) maybe_aggregate();
  }

  void on(const event::ComputationDone& e) {
    if (s_.phase != SatPhase::computation) return;
    s_.trained = e.trained;
    s_.phase = SatPhase::aggregation;
    const auto members = env_.constellation().plane_members(s_.plane);
    s_.tree = build_routing_tree(s_.plane, members, s_.sink);
    for (auto it = s_.cache.begin(); it != s_.cache.end();) {
      if (s_.tree->is_child(it->first, s_.id)) {
        ++it;
        continue;
      }
      drop(event::IslArrival{it->first, it->second}, "partial update from non-child", true);
      it = s_.cache.erase(it);
    }
    maybe_aggregate();
  }

 private:
  void drop(const event::IslArrival& e, std::string reason, bool protocol_error) {
    out_.push_back(action::Dropped{e.from, e.msg, std::move(reason), protocol_error});
  }

  void arm_timer(double at) {
    s_.timer_armed = true;
    out_.push_back(action::ArmTimer{at, ++s_.timer_token});
  }

  void accept_model(const Message& m, NodeId from) {
    s_.has_model = true;
    s_.global = m.payload;
    s_.requests_paused = false;
    s_.timer_armed = false;  // any pending reconnect is moot now
    Message fwd = m;
    fwd.origin = s_.id;
    if (from == orbital::kPsNode) {
      // Source node: predict the sink before distributing.
      const auto members = env_.constellation().plane_members(s_.plane);
      const double te = env_.estimate(s_.plane, t_).total_s;
      s_.sink = select_sink(members, t_ + te, env_.contacts());
      fwd.sink = s_.sink;
      fwd.plane = s_.plane;
    } else {
      s_.sink = m.sink;
      s_.model_from.insert(from);
    }
    for (NodeId nb : env_.constellation().neighbors(s_.id)) {
      if (nb == from || s_.model_from.contains(nb)) continue;
      // The neighbour is already sending us this round's model on the shared link.
      if (env_.model_incoming(nb, s_.id, s_.epoch)) continue;
      out_.push_back(action::SendIsl{nb, fwd});
    }
    s_.phase = SatPhase::computation;
    out_.push_back(action::StartComputation{s_.global});
  }

  void maybe_aggregate() {
    const auto& kids = s_.tree->children(s_.id);
    if (!std::all_of(kids.begin(), kids.end(), [&](NodeId c) { return s_.cache.contains(c); })) return;

    std::vector<ModelParams> incoming;
    std::int64_t weight = s_.samples;
    for (NodeId c : kids) {  // ascending child ID
      incoming.push_back(s_.cache.at(c).payload);
      weight += s_.cache.at(c).weight_samples;
    }
    Message out = model_message(MessageKind::partial_update, s_.epoch,
                                learning::partial_aggregate(*s_.trained, s_.samples, incoming), env_.wire());
    out.sink = s_.sink;
    out.origin = s_.id;
    out.plane = s_.plane;
    out.weight_samples = weight;

    if (s_.id == s_.sink)
      s_.uploads.push_back(std::move(out));
    else
      out_.push_back(action::SendIsl{s_.tree->parent_of.at(s_.id), std::move(out)});

    start_next_round();
    try_connect();
  }

  void start_next_round() {
    ++s_.epoch;
    s_.phase = SatPhase::distribution;
    s_.has_model = false;
    s_.sink = kFallbackSink;
    s_.tree.reset();
    s_.trained.reset();
    s_.cache.clear();
    s_.model_from.clear();
    s_.requests_paused = false;
  }

  void try_connect() {
    if (s_.connecting || s_.timer_armed) return;
    if (!s_.uploads.empty()) {
      deliver_upload();
      return;
    }
    if (s_.phase == SatPhase::distribution && !s_.has_model && !s_.requests_paused &&
        env_.contacts().visible(s_.id, t_)) {
      Message req = control_message(MessageKind::model_request, s_.epoch, env_.wire());
      req.origin = s_.id;
      req.plane = s_.plane;
      s_.connecting = true;
      out_.push_back(action::ConnectPs{std::move(req)});
    }
  }

  // Sink (or fallback carrier) handing an orbit aggregate to the PS: now if
  // visible, after a short wait if the PS comes into view soon, otherwise one
  // more hop along the ring towards the PS.
  void deliver_upload() {
    Message& m = s_.uploads.front();
    const auto& contacts = env_.contacts();
    if (contacts.visible(s_.id, t_)) {
      s_.connecting = true;
      Message req = m;
      req.origin = s_.id;
      out_.push_back(action::ConnectPs{std::move(req)});
      return;
    }
    const double grace = env_.options().grace_factor * env_.estimate(s_.plane, t_).max_hop_time_s;
    const auto next = contacts.next_contact_start(s_.id, t_);
    if (next && *next - t_ <= grace) {
      arm_timer(*next);
      return;
    }
    const int plane_size = static_cast<int>(env_.constellation().plane_members(s_.plane).size());
    const auto neighbours = env_.constellation().neighbors(s_.id);
    if (m.fallback_hops >= plane_size || neighbours.empty()) {
      // Hop budget spent: hold the aggregate until this node's own next contact.
      if (next) arm_timer(*next);
      return;
    }
    std::vector<NodeId> options;
    for (NodeId nb : neighbours)
      if (m.sink != kFallbackSink || nb != m.origin) options.push_back(nb);
    if (options.empty()) options = neighbours;
    const auto& c = env_.constellation();
    NodeId best = options.front();
    double best_d = std::numeric_limits<double>::infinity();
    for (NodeId nb : options) {
      const double d = c.distance_km(nb, orbital::kPsNode, t_);
      if (d < best_d || (d == best_d && nb < best)) {
        best_d = d;
        best = nb;
      }
    }
    Message fwd = std::move(m);
    s_.uploads.pop_front();
    fwd.sink = kFallbackSink;
    fwd.origin = s_.id;
    ++fwd.fallback_hops;
    out_.push_back(action::SendIsl{best, std::move(fwd)});
    try_connect();
  }

  SatState& s_;
  const SatelliteEnv& env_;
  double t_;
  std::vector<SatAction> out_;
};

}  // namespace

std::vector<SatAction> satellite_step(SatState& state, const SatEvent& ev, const SatelliteEnv& env, double t) {
  Machine m(state, env, t);
  std::visit([&](const auto& e) { m.on(e); }, ev);
  return m.take();
}

}  // namespace orbitfl::protocol
