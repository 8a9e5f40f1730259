#pragma once

// FedISL parameter-server and satellite state machines, sink election, ring
// routing trees, and the FedNonISL baseline.
//
// The state machines are driven by the simulator: each call consumes one event
// at a simulated time, mutates the node's state and returns the actions the
// node wants performed (transfers, PS connections, computation, timers). They
// never touch clocks or queues themselves, so they can be unit-tested directly.

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "orbitfl/learning.hpp"
#include "orbitfl/link.hpp"
#include "orbitfl/orbital.hpp"

namespace orbitfl::protocol {

using learning::ModelParams;
using orbital::NodeId;

/// Sink field of an orbit aggregate that is being forwarded along the ring
/// because the elected sink could not reach the PS.
inline constexpr NodeId kFallbackSink = -1;

enum class MessageKind { global_model, partial_update, model_request, wait_hint, reconnect_hint, ack };

inline bool carries_model(MessageKind k) {
  return k == MessageKind::global_model || k == MessageKind::partial_update;
}

const char* to_string(MessageKind k);

struct Message {
  MessageKind kind = MessageKind::ack;
  int epoch = 0;
  NodeId sink = kFallbackSink;
  NodeId origin = 0;  // last sender
  int plane = -1;
  ModelParams payload;
  std::int64_t weight_samples = 0;  // samples folded into a partial_update payload
  std::int64_t size_bits = 0;
  int fallback_hops = 0;
};

Message control_message(MessageKind kind, int epoch, const link::WireFormat& wire);
Message model_message(MessageKind kind, int epoch, ModelParams payload, const link::WireFormat& wire);

// --- routing -------------------------------------------------------------

struct RoutingTree {
  int plane = 0;
  NodeId sink = 0;
  std::map<NodeId, NodeId> parent_of;
  std::map<NodeId, std::vector<NodeId>> children_of;  // ascending IDs

  const std::vector<NodeId>& children(NodeId id) const;
  bool is_child(NodeId child, NodeId parent) const;
  int hops_to_sink(NodeId id) const;
  int depth() const;
};

/// Hop-minimal tree over a ring rooted at `sink`; at the antipodal tie of an
/// even ring the node routes via its smaller-ID neighbour. Throws DomainError
/// when the sink is not in the ring.
RoutingTree build_routing_tree(int plane, std::span<const NodeId> ring, NodeId sink);

// --- prediction ----------------------------------------------------------

/// Predicted visibility between satellites and the parameter server.
class PsContactOracle {
 public:
  virtual ~PsContactOracle() = default;
  virtual bool visible(NodeId sat, double t) const = 0;
  virtual double remaining_contact(NodeId sat, double t) const = 0;
  /// Start of the first window at or after t (t itself when visible).
  virtual std::optional<double> next_contact_start(NodeId sat, double t) const = 0;
};

/// Oracle evaluating orbital::next_contact directly, without caching.
class DirectContactOracle final : public PsContactOracle {
 public:
  DirectContactOracle(const orbital::Constellation& c, double horizon_s,
                      orbital::ContactSearch search = {})
      : constellation_(c), horizon_s_(horizon_s), search_(search) {}

  bool visible(NodeId sat, double t) const override;
  double remaining_contact(NodeId sat, double t) const override;
  std::optional<double> next_contact_start(NodeId sat, double t) const override;

 private:
  const orbital::Constellation& constellation_;
  double horizon_s_;
  orbital::ContactSearch search_;
};

struct AggregationEstimate {
  double max_hop_time_s = 0;      // T_c,p
  double max_compute_time_s = 0;  // T_L,p
  double total_s = 0;             // T_e,p
};

/// floor(K/2)*T_c + T_L + floor(K/2)*T_c.
double estimate_aggregation_time(int sats_in_plane, double max_hop_time_s, double max_compute_time_s);

/// T_c from the current adjacent-pair distances of the plane, T_L from the
/// per-satellite compute times (indexed like plane_members).
AggregationEstimate estimate_aggregation_time(const orbital::Constellation& c, int plane, double t,
                                              const link::LinkParams& link, std::int64_t model_bits,
                                              std::span<const double> compute_times_s);

/// Among members visible to the PS at decision_t, the one with the longest
/// remaining contact (ties: smallest ID). With none visible, the member whose
/// next contact starts soonest (ties: smallest ID; smallest ID if none ever).
NodeId select_sink(std::span<const NodeId> members, double decision_t, const PsContactOracle& oracle);

// --- parameter server ----------------------------------------------------

enum class PsPhase { distribution, aggregation };
enum class PsVerdict { send_model, accept_update, wait, reconnect, terminate };

struct PsDecision {
  PsVerdict verdict = PsVerdict::terminate;
  Message response;        // what the PS sends back (model, hint or ack)
  bool protocol_error = false;
  std::string note;
};

struct PsCompletion {
  bool epoch_completed = false;
  int completed_epoch = 0;
};

struct PsState {
  int epoch = 1;  // round n: distributes w^(n-1), aggregates w^n
  PsPhase phase = PsPhase::distribution;
  int num_planes = 0;
  std::int64_t total_samples = 0;
  link::WireFormat wire;
  std::set<int> sent_planes;      // T^n
  std::set<int> received_planes;  // R^n
  std::optional<int> in_flight_plane;
  std::map<int, ModelParams> partials;  // per plane, summed in ascending plane order
  ModelParams global_params;
  std::map<int, NodeId> next_round_poller;  // per plane: the one satellite allowed to poll early
  int protocol_errors = 0;
};

/// Decides how to answer a connection (model request or partial upload) from
/// `from`, a satellite of `plane`. State changes that depend on the transfer
/// succeeding are applied by ps_complete.
PsDecision ps_handle_connection(PsState& state, const Message& request, NodeId from, int plane,
                                double t, const PsContactOracle& oracle);

/// Applies a finished exchange: marks the plane as served, or folds the
/// partial aggregate and, once all planes reported, divides by D and opens the
/// next round.
PsCompletion ps_complete(PsState& state, const Message& request, int plane, const PsDecision& decision);

// --- satellites ----------------------------------------------------------

enum class SatPhase { distribution, computation, aggregation };

struct ProtocolOptions {
  double reconnect_wait_s = 10.0;
  double grace_factor = 2.0;  // sink waits for the PS if contact begins within grace_factor*T_c

  friend bool operator==(const ProtocolOptions&, const ProtocolOptions&) = default;
};

/// What a satellite may ask of its surroundings.
class SatelliteEnv {
 public:
  virtual ~SatelliteEnv() = default;
  virtual const orbital::Constellation& constellation() const = 0;
  virtual const PsContactOracle& contacts() const = 0;
  virtual const link::WireFormat& wire() const = 0;
  virtual const ProtocolOptions& options() const = 0;
  virtual AggregationEstimate estimate(int plane, double t) const = 0;
  /// True while a global model of `epoch` is on the ISL from `from` to `to`.
  virtual bool model_incoming(NodeId from, NodeId to, int epoch) const = 0;
};

namespace event {
struct PsContactStart {};
struct Timer {
  std::uint64_t token = 0;
};
struct IslArrival {
  NodeId from = 0;
  Message msg;
};
struct PsReply {
  Message request;
  PsVerdict verdict = PsVerdict::terminate;
  Message response;
};
struct PsUnreachable {
  Message request;
};
struct ComputationDone {
  ModelParams trained;
};
}  // namespace event

using SatEvent = std::variant<event::PsContactStart, event::Timer, event::IslArrival, event::PsReply,
                              event::PsUnreachable, event::ComputationDone>;

namespace action {
struct SendIsl {
  NodeId to = 0;
  Message msg;
};
struct ConnectPs {
  Message request;
};
struct StartComputation {
  ModelParams initial;
};
struct ArmTimer {
  double at_s = 0;
  std::uint64_t token = 0;
};
struct Dropped {
  NodeId from = 0;
  Message msg;
  std::string reason;
  bool protocol_error = false;
};
}  // namespace action

using SatAction =
    std::variant<action::SendIsl, action::ConnectPs, action::StartComputation, action::ArmTimer, action::Dropped>;

struct SatState {
  NodeId id = 0;
  int plane = 0;
  std::int64_t samples = 1;

  int epoch = 1;
  SatPhase phase = SatPhase::distribution;
  bool has_model = false;
  NodeId sink = kFallbackSink;
  std::optional<RoutingTree> tree;
  ModelParams global;
  std::optional<ModelParams> trained;
  std::map<NodeId, Message> cache;  // I_k^n, keyed by sender
  std::set<NodeId> model_from;
  std::deque<Message> uploads;      // orbit aggregates this node must hand to the PS
  bool connecting = false;
  bool requests_paused = false;     // PS said the model will arrive over ISL
  std::uint64_t timer_token = 0;
  bool timer_armed = false;
};

std::vector<SatAction> satellite_step(SatState& state, const SatEvent& ev, const SatelliteEnv& env, double t);

// --- FedNonISL ------------------------------------------------------------

enum class BaselinePhase { awaiting_model, computing, awaiting_upload };

struct BaselineSatState {
  NodeId id = 0;
  int plane = 0;
  std::int64_t samples = 1;
  int epoch = 1;
  BaselinePhase phase = BaselinePhase::awaiting_model;
  ModelParams global;
  std::optional<ModelParams> trained;
  bool connecting = false;
};

/// Baseline satellite: talks to the PS only at the start of a visit (or right
/// after training, when still in view); no ISL traffic.
std::vector<SatAction> fednonisl_satellite_step(BaselineSatState& state, const SatEvent& ev,
                                                const SatelliteEnv& env, double t);

struct BaselinePsState {
  int epoch = 1;
  int num_satellites = 0;
  std::int64_t total_samples = 0;
  link::WireFormat wire;
  std::set<NodeId> sent;
  std::set<NodeId> received;
  std::optional<NodeId> in_flight;
  std::map<NodeId, std::pair<ModelParams, std::int64_t>> updates;  // ascending ID
  ModelParams global_params;
  int protocol_errors = 0;
};

PsDecision fednonisl_ps_handle(BaselinePsState& state, const Message& request, NodeId from, double t);
PsCompletion fednonisl_ps_complete(BaselinePsState& state, const Message& request, NodeId from,
                                   const PsDecision& decision);

}  // namespace orbitfl::protocol
