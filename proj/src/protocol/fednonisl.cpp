#include <vector>

#include "orbitfl/protocol.hpp"

namespace orbitfl::protocol {

namespace {

PsDecision reply(PsVerdict verdict, MessageKind kind, int epoch, const link::WireFormat& wire, std::string note) {
  PsDecision d;
  d.verdict = verdict;
  d.response = control_message(kind, epoch, wire);
  d.note = std::move(note);
  return d;
}

void connect(BaselineSatState& s, Message req, std::vector<SatAction>& out) {
  req.origin = s.id;
  req.plane = s.plane;
  s.connecting = true;
  out.push_back(action::ConnectPs{std::move(req)});
}

Message upload_message(const BaselineSatState& s, const link::WireFormat& wire) {
  Message m = model_message(MessageKind::partial_update, s.epoch, *s.trained, wire);
  m.weight_samples = s.samples;
  m.sink = s.id;
  return m;
}

}  // namespace

std::vector<SatAction> fednonisl_satellite_step(BaselineSatState& s, const SatEvent& ev,
                                                const SatelliteEnv& env, double t) {
  std::vector<SatAction> out;
  const auto& wire = env.wire();

  if (std::holds_alternative<event::PsContactStart>(ev)) {
    if (s.connecting) return out;
    if (s.phase == BaselinePhase::awaiting_model)
      connect(s, control_message(MessageKind::model_request, s.epoch, wire), out);
    else if (s.phase == BaselinePhase::awaiting_upload)
      connect(s, upload_message(s, wire), out);
  } else if (const auto* r = std::get_if<event::PsReply>(&ev)) {
    s.connecting = false;
    if (r->request.kind == MessageKind::model_request) {
      if (r->verdict == PsVerdict::send_model && s.phase == BaselinePhase::awaiting_model) {
        s.global = r->response.payload;
        s.phase = BaselinePhase::computing;
        out.push_back(action::StartComputation{s.global});
      }
      // Otherwise the PS has nothing new for us yet; try again next visit.
    } else if (r->request.kind == MessageKind::partial_update) {
      if (r->verdict == PsVerdict::accept_update || r->verdict == PsVerdict::terminate) {
        if (r->verdict == PsVerdict::terminate)
          out.push_back(action::Dropped{orbital::kPsNode, r->request, "PS refused update", true});
        ++s.epoch;
        s.phase = BaselinePhase::awaiting_model;
        s.trained.reset();
      }
    }
  } else if (const auto* d = std::get_if<event::ComputationDone>(&ev)) {
    if (s.phase != BaselinePhase::computing) return out;
    s.trained = d->trained;
    s.phase = BaselinePhase::awaiting_upload;
    if (!s.connecting && env.contacts().visible(s.id, t)) connect(s, upload_message(s, wire), out);
  } else if (const auto* a = std::get_if<event::IslArrival>(&ev)) {
    out.push_back(action::Dropped{a->from, a->msg, "baseline satellites do not use ISLs", true});
  } else if (std::holds_alternative<event::PsUnreachable>(ev)) {
    s.connecting = false;  // next visit
  }
  return out;
}

PsDecision fednonisl_ps_handle(BaselinePsState& s, const Message& request, NodeId from, double) {
  if (from < 1 || from > s.num_satellites) {
    ++s.protocol_errors;
    PsDecision d = reply(PsVerdict::terminate, MessageKind::ack, s.epoch, s.wire, "unknown node");
    d.protocol_error = true;
    return d;
  }
  if (request.kind == MessageKind::model_request) {
    if (request.epoch == s.epoch + 1)
      return reply(PsVerdict::terminate, MessageKind::wait_hint, s.epoch, s.wire, "aggregation pending");
    if (request.epoch == s.epoch && !s.sent.contains(from)) {
      if (s.in_flight == from)
        return reply(PsVerdict::reconnect, MessageKind::reconnect_hint, s.epoch, s.wire, "transfer in flight");
      s.in_flight = from;
      PsDecision d;
      d.verdict = PsVerdict::send_model;
      d.response = model_message(MessageKind::global_model, s.epoch, s.global_params, s.wire);
      return d;
    }
    if (request.epoch == s.epoch)
      return reply(PsVerdict::terminate, MessageKind::wait_hint, s.epoch, s.wire, "model already sent");
  } else if (request.kind == MessageKind::partial_update && request.epoch == s.epoch) {
    if (!s.sent.contains(from) || s.received.contains(from))
      return reply(PsVerdict::terminate, MessageKind::ack, s.epoch, s.wire, "unexpected update");
    if (request.payload.dimension() != s.global_params.dimension()) {
      ++s.protocol_errors;
      PsDecision d = reply(PsVerdict::terminate, MessageKind::ack, s.epoch, s.wire, "dimension mismatch");
      d.protocol_error = true;
      return d;
    }
    return reply(PsVerdict::accept_update, MessageKind::ack, s.epoch, s.wire, {});
  }
  ++s.protocol_errors;
  PsDecision d = reply(PsVerdict::terminate, MessageKind::ack, s.epoch, s.wire, "epoch mismatch");
  d.protocol_error = true;
  return d;
}

PsCompletion fednonisl_ps_complete(BaselinePsState& s, const Message& request, NodeId from,
                                   const PsDecision& decision) {
  PsCompletion done;
  if (decision.verdict == PsVerdict::send_model) {
    s.in_flight.reset();
    s.sent.insert(from);
    return done;
  }
  if (decision.verdict != PsVerdict::accept_update) return done;

  s.updates[from] = {request.payload, request.weight_samples};
  s.received.insert(from);
  if (static_cast<int>(s.received.size()) < s.num_satellites) return done;

  // Same arithmetic shape as the in-orbit path: D_k-weighted sum, then / D.
  std::vector<ModelParams> weighted;
  weighted.reserve(s.updates.size());
  for (const auto& [id, upd] : s.updates)
    weighted.push_back(learning::partial_aggregate(upd.first, upd.second, {}));
  s.global_params = learning::global_aggregate(weighted, s.total_samples);

  done.epoch_completed = true;
  done.completed_epoch = s.epoch;
  ++s.epoch;
  s.sent.clear();
  s.received.clear();
  s.updates.clear();
  return done;
}

}  // namespace orbitfl::protocol
