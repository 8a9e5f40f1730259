#include <vector>

#include "orbitfl/protocol.hpp"

namespace orbitfl::protocol {

namespace {

PsDecision reply(PsVerdict verdict, MessageKind kind, int epoch, const link::WireFormat& wire,
                 std::string note = {}) {
  PsDecision d;
  d.verdict = verdict;
  d.response = control_message(kind, epoch, wire);
  d.note = std::move(note);
  return d;
}

PsDecision error(PsState& s, std::string note) {
  ++s.protocol_errors;
  PsDecision d = reply(PsVerdict::terminate, MessageKind::ack, s.epoch, s.wire, std::move(note));
  d.protocol_error = true;
  return d;
}

// A satellite that already finished round n asks for round n+1 while the PS
// still works on n. One satellite per plane is told to keep polling; the rest
// wait for the ISL distribution or their next PS contact.
PsDecision early_request(PsState& s, NodeId from, int plane, double t, const PsContactOracle& oracle) {
  auto it = s.next_round_poller.find(plane);
  if (it == s.next_round_poller.end() || it->second == from || !oracle.visible(it->second, t)) {
    s.next_round_poller[plane] = from;
    return reply(PsVerdict::reconnect, MessageKind::reconnect_hint, s.epoch, s.wire, "round not open yet");
  }
  return reply(PsVerdict::wait, MessageKind::wait_hint, s.epoch, s.wire, "plane has a poller");
}

}  // namespace

PsDecision ps_handle_connection(PsState& s, const Message& request, NodeId from, int plane, double t,
                                const PsContactOracle& oracle) {
  if (plane < 0 || plane >= s.num_planes) return error(s, "connection from unknown plane");

  if (request.kind == MessageKind::model_request) {
    if (request.epoch == s.epoch + 1) return early_request(s, from, plane, t, oracle);
    if (request.epoch != s.epoch) return error(s, "model request for epoch " + std::to_string(request.epoch));
    if (s.phase == PsPhase::distribution && !s.sent_planes.contains(plane)) {
      if (s.in_flight_plane == plane)
        return reply(PsVerdict::reconnect, MessageKind::reconnect_hint, s.epoch, s.wire, "transfer in flight");
      s.in_flight_plane = plane;
      PsDecision d;
      d.verdict = PsVerdict::send_model;
      d.response = model_message(MessageKind::global_model, s.epoch, s.global_params, s.wire);
      return d;
    }
    // Weights already sent to this orbit.
    return reply(PsVerdict::wait, MessageKind::wait_hint, s.epoch, s.wire, "weights already sent to orbit");
  }

  if (request.kind == MessageKind::partial_update) {
    if (request.epoch != s.epoch)
      return error(s, "partial update for epoch " + std::to_string(request.epoch));
    if (request.payload.dimension() != s.global_params.dimension())
      return error(s, "partial update dimension mismatch");
    if (s.received_planes.contains(plane))
      return reply(PsVerdict::terminate, MessageKind::ack, s.epoch, s.wire, "orbit already aggregated");
    if (s.phase == PsPhase::distribution)
      return reply(PsVerdict::reconnect, MessageKind::reconnect_hint, s.epoch, s.wire, "distribution not finished");
    return reply(PsVerdict::accept_update, MessageKind::ack, s.epoch, s.wire);
  }

  return error(s, std::string("unexpected ") + to_string(request.kind));
}

PsCompletion ps_complete(PsState& s, const Message& request, int plane, const PsDecision& decision) {
  PsCompletion done;
  if (decision.verdict == PsVerdict::send_model) {
    s.in_flight_plane.reset();
    s.sent_planes.insert(plane);
    if (static_cast<int>(s.sent_planes.size()) == s.num_planes) s.phase = PsPhase::aggregation;
    return done;
  }
  if (decision.verdict != PsVerdict::accept_update) return done;

  s.partials[plane] = request.payload;
  s.received_planes.insert(plane);
  if (static_cast<int>(s.received_planes.size()) < s.num_planes) return done;

  std::vector<ModelParams> ordered;
  ordered.reserve(s.partials.size());
  for (const auto& [p, w] : s.partials) ordered.push_back(w);
  s.global_params = learning::global_aggregate(ordered, s.total_samples);

  done.epoch_completed = true;
  done.completed_epoch = s.epoch;
  ++s.epoch;
  s.phase = PsPhase::distribution;
  s.sent_planes.clear();
  s.received_planes.clear();
  s.partials.clear();
  s.next_round_poller.clear();
  return done;
}

}  // namespace orbitfl::protocol
