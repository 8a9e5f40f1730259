#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "orbitfl/errors.hpp"
#include "orbitfl/rng.hpp"
#include "orbitfl/sim.hpp"

namespace orbitfl::sim {

namespace {

using orbital::NodeId;
using protocol::Message;
using protocol::MessageKind;
using protocol::PsDecision;
using protocol::PsVerdict;

namespace ev {
struct ToSat {
  NodeId node = 0;
  protocol::SatEvent event;
};
struct IslArrive {
  std::uint64_t flight = 0;
};
struct PsServe {};
struct PsExchangeDone {};
}  // namespace ev

using Payload = std::variant<ev::ToSat, ev::IslArrive, ev::PsServe, ev::PsExchangeDone>;

// PS service runs after every other event of the same instant, so that
// simultaneous requests are all queued before the first one is picked.
enum EventClass : int { kNormal = 0, kPsService = 1 };

struct Key {
  double t;
  int cls;
  std::uint64_t seq;

  bool operator>(const Key& o) const { return std::tie(t, cls, seq) > std::tie(o.t, o.cls, o.seq); }
};

struct Flight {
  NodeId from = 0;
  NodeId to = 0;
  Message msg;
};

struct PendingConnection {
  double t;
  NodeId node;
  std::uint64_t seq;

  bool operator<(const PendingConnection& o) const { return std::tie(t, node, seq) < std::tie(o.t, o.node, o.seq); }
};

struct Exchange {
  NodeId from = 0;
  Message request;
  PsDecision decision;
  int control_msgs = 0;
  std::int64_t control_bits = 0;
};

const char* phase_name(protocol::SatPhase p) {
  switch (p) {
    case protocol::SatPhase::distribution: return "distribution";
    case protocol::SatPhase::computation: return "computation";
    case protocol::SatPhase::aggregation: return "aggregation";
  }
  return "?";
}

const char* phase_name(protocol::BaselinePhase p) {
  switch (p) {
    case protocol::BaselinePhase::awaiting_model: return "awaiting_model";
    case protocol::BaselinePhase::computing: return "computing";
    case protocol::BaselinePhase::awaiting_upload: return "awaiting_upload";
  }
  return "?";
}

class Engine final : public protocol::SatelliteEnv {
 public:
  Engine(const ScenarioConfig& config, const Workload& workload, const RunOptions& options)
      : config_(config),
        workload_(workload),
        options_(options),
        constellation_(make_constellation(config)),
        plan_(constellation_, 0.0, config.horizon_s + plan_margin(config)) {
    const int sats = constellation_.num_satellites();
    if (static_cast<int>(workload.local.size()) != sats)
      throw ConfigError("data", 0, "workload has " + std::to_string(workload.local.size()) + " shards for " +
                                       std::to_string(sats) + " satellites");
    features_ = workload.test.num_features;
    classes_ = workload.test.num_classes;
    dimension_ = learning::model_dimension(features_, classes_);

    compute_s_.resize(sats);
    for (int k = 0; k < sats; ++k) compute_s_[k] = learning::compute_time(workload.local[k], config.learner);
    plane_compute_s_.resize(constellation_.num_planes());
    for (int p = 0; p < constellation_.num_planes(); ++p)
      for (NodeId id : constellation_.plane_members(p)) plane_compute_s_[p].push_back(compute_s_[id - 1]);
  }

  // SatelliteEnv
  const orbital::Constellation& constellation() const override { return constellation_; }
  const protocol::PsContactOracle& contacts() const override { return plan_; }
  const link::WireFormat& wire() const override { return config_.wire; }
  const protocol::ProtocolOptions& options() const override { return config_.options; }

  protocol::AggregationEstimate estimate(int plane, double t) const override {
    return protocol::estimate_aggregation_time(constellation_, plane, t, config_.link,
                                               config_.wire.model_bits(static_cast<std::int64_t>(dimension_)),
                                               plane_compute_s_.at(plane));
  }

  bool model_incoming(NodeId from, NodeId to, int epoch) const override {
    for (const auto& [id, f] : flights_)
      if (f.from == from && f.to == to && f.msg.kind == MessageKind::global_model && f.msg.epoch == epoch)
        return true;
    return false;
  }

  RunResult run() {
    init_nodes();
    for (NodeId sat = 1; sat <= constellation_.num_satellites(); ++sat)
      for (const auto& w : plan_.windows(sat))
        if (w.start_s <= config_.horizon_s) push(w.start_s, kNormal, ev::ToSat{sat, protocol::event::PsContactStart{}});

    while (!queue_.empty()) {
      const Key key = queue_.top();
      if (key.t > config_.horizon_s) break;
      queue_.pop();
      auto node = payloads_.extract(key.seq);
      now_ = key.t;
      ++result_.events;
      std::visit([&](auto& e) { handle(e); }, node.mapped());

      if (done()) break;
      if (now_ - last_epoch_end_ > config_.stall_limit_s)
        throw DeadlockError("no epoch completed within " + std::to_string(config_.stall_limit_s) + " s: " +
                            describe_stall());
    }
    if (queue_.empty() && config_.max_epochs > 0 && !done())
      throw DeadlockError("event queue empty before epoch " + std::to_string(config_.max_epochs) +
                          " completed: " + describe_stall());

    result_.end_time_s = now_;
    result_.final_params = global();
    result_.traffic.isl_in_flight = static_cast<std::int64_t>(flights_.size());
    result_.traffic.protocol_errors += ps_errors();
    return std::move(result_);
  }

 private:
  static double plan_margin(const ScenarioConfig& c) {
    return 2.0 * orbital::orbital_period(c.constellation.altitude_km);
  }

  bool fedisl() const { return config_.protocol == Protocol::fedisl; }

  bool done() const {
    return config_.max_epochs > 0 && static_cast<int>(result_.records.size()) >= config_.max_epochs;
  }

  const learning::ModelParams& global() const { return fedisl() ? ps_.global_params : base_ps_.global_params; }

  int ps_errors() const { return fedisl() ? ps_.protocol_errors : base_ps_.protocol_errors; }

  void init_nodes() {
    learning::ModelParams w0(dimension_);
    if (config_.init == InitKind::random) {
      Rng rng(config_.seed ^ 0x5eedf00dULL);
      for (std::size_t i = 0; i < dimension_; ++i) w0[i] = 0.01 * rng.normal();
    }
    result_.initial = learning::evaluate(w0, workload_.test);

    ps_.num_planes = constellation_.num_planes();
    ps_.total_samples = workload_.total_samples;
    ps_.wire = config_.wire;
    ps_.global_params = w0;
    base_ps_.num_satellites = constellation_.num_satellites();
    base_ps_.total_samples = workload_.total_samples;
    base_ps_.wire = config_.wire;
    base_ps_.global_params = w0;

    for (NodeId id = 1; id <= constellation_.num_satellites(); ++id) {
      const auto samples = static_cast<std::int64_t>(workload_.local[id - 1].size());
      protocol::SatState s;
      s.id = id;
      s.plane = constellation_.plane_of(id);
      s.samples = samples;
      sats_.push_back(std::move(s));
      protocol::BaselineSatState b;
      b.id = id;
      b.plane = constellation_.plane_of(id);
      b.samples = samples;
      base_sats_.push_back(std::move(b));
    }
  }

  template <class E>
  void push(double t, int cls, E e) {
    const std::uint64_t seq = next_seq_++;
    queue_.push(Key{t, cls, seq});
    payloads_.emplace(seq, Payload{std::move(e)});
  }

  void deliver(NodeId node, const protocol::SatEvent& e) {
    auto actions = fedisl() ? protocol::satellite_step(sats_[node - 1], e, *this, now_)
                            : protocol::fednonisl_satellite_step(base_sats_[node - 1], e, *this, now_);
    for (auto& a : actions) std::visit([&](auto& x) { apply(node, x); }, a);
  }

  // --- events ---------------------------------------------------------------

  void handle(ev::ToSat& e) { deliver(e.node, e.event); }

  void handle(ev::IslArrive& e) {
    auto f = flights_.extract(e.flight);
    ++result_.traffic.isl_arrived;
    Flight& flight = f.mapped();
    deliver(flight.to, protocol::event::IslArrival{flight.from, std::move(flight.msg)});
  }

  void handle(ev::PsServe&) {
    if (exchange_ || now_ < ps_busy_until_ || pending_.empty()) return;
    const PendingConnection pc = *pending_.begin();
    pending_.erase(pending_.begin());
    Message request = std::move(requests_.at(pc.seq));
    requests_.erase(pc.seq);
    start_exchange(pc.node, std::move(request));
    if (!exchange_) push(now_, kPsService, ev::PsServe{});
  }

  void handle(ev::PsExchangeDone&) {
    Exchange x = std::move(*exchange_);
    exchange_.reset();
    auto& tr = result_.traffic;
    tr.ps_control_msgs += x.control_msgs;
    tr.ps_control_bits += x.control_bits;

    protocol::PsCompletion c;
    if (fedisl())
      c = protocol::ps_complete(ps_, x.request, constellation_.plane_of(x.from), x.decision);
    else
      c = protocol::fednonisl_ps_complete(base_ps_, x.request, x.from, x.decision);

    if (x.decision.verdict == PsVerdict::send_model) {
      ++ps_down_msgs_;
      ps_down_bits_ += x.decision.response.size_bits;
    } else if (x.decision.verdict == PsVerdict::accept_update) {
      ++ps_up_msgs_;
      ps_up_bits_ += x.request.size_bits;
    }
    if (c.epoch_completed) record_epoch(c.completed_epoch);

    deliver(x.from, protocol::event::PsReply{std::move(x.request), x.decision.verdict, std::move(x.decision.response)});
    push(now_, kPsService, ev::PsServe{});
  }

  // --- actions --------------------------------------------------------------

  void apply(NodeId node, protocol::action::SendIsl& a) {
    const auto pair = std::minmax(node, a.to);
    double& busy = isl_busy_[pair];
    const double start = std::max(now_, busy);
    auto& tr = result_.traffic;
    if (!constellation_.visible(node, a.to, start)) {
      ++tr.dropped;
      return;
    }
    const double d_m = constellation_.distance_km(node, a.to, start) * 1e3;
    const double arrive = start + link::transfer_time(config_.link, d_m, static_cast<double>(a.msg.size_bits), true);
    busy = arrive;
    ++tr.isl_sent;
    ++isl_msgs_;
    isl_bits_ += a.msg.size_bits;
    if (a.msg.kind == MessageKind::partial_update && a.msg.sink == protocol::kFallbackSink) ++fallback_hops_;
    const std::uint64_t id = next_flight_++;
    flights_.emplace(id, Flight{node, a.to, std::move(a.msg)});
    push(arrive, kNormal, ev::IslArrive{id});
  }

  void apply(NodeId node, protocol::action::ConnectPs& a) {
    const std::uint64_t seq = next_seq_++;
    pending_.insert(PendingConnection{now_, node, seq});
    requests_.emplace(seq, std::move(a.request));
    push(std::max(now_, ps_busy_until_), kPsService, ev::PsServe{});
  }

  void apply(NodeId node, protocol::action::StartComputation& a) {
    const auto& data = workload_.local[node - 1];
    learning::ModelParams trained = config_.train ? learning::local_gd(a.initial, data, config_.learner) : a.initial;
    push(now_ + compute_s_[node - 1], kNormal, ev::ToSat{node, protocol::event::ComputationDone{std::move(trained)}});
  }

  void apply(NodeId node, protocol::action::ArmTimer& a) {
    push(std::max(a.at_s, now_), kNormal, ev::ToSat{node, protocol::event::Timer{a.token}});
  }

  void apply(NodeId, protocol::action::Dropped& a) {
    ++result_.traffic.dropped;
    if (a.protocol_error) ++result_.traffic.protocol_errors;
  }

  // --- PS radio -------------------------------------------------------------

  PsDecision decide(NodeId from, const Message& request) {
    if (fedisl())
      return protocol::ps_handle_connection(ps_, request, from, constellation_.plane_of(from), now_, plan_);
    return protocol::fednonisl_ps_handle(base_ps_, request, from, now_);
  }

  void release_in_flight() {
    ps_.in_flight_plane.reset();
    base_ps_.in_flight.reset();
  }

  // One request/response exchange on the PS radio. The PS first answers the
  // request (an upload is announced with a control header before its payload
  // is sent), then the payload and acknowledgement follow. The whole exchange
  // must fit into the remaining contact.
  void start_exchange(NodeId from, Message request) {
    if (!plan_.visible(from, now_)) {
      unreachable(from, std::move(request));
      return;
    }
    const double d_m = constellation_.distance_km(from, orbital::kPsNode, now_) * 1e3;
    const auto tt = [&](std::int64_t bits) {
      return link::transfer_time(config_.link, d_m, static_cast<double>(bits), true);
    };
    const auto control = config_.wire.control_bits;

    Exchange x;
    x.from = from;
    x.decision = decide(from, request);
    double duration = 0;
    const bool model_response = protocol::carries_model(x.decision.response.kind);
    if (request.kind == MessageKind::partial_update) {
      duration += tt(control);
      x.control_msgs += 1;
      x.control_bits += control;
      if (x.decision.verdict == PsVerdict::accept_update) duration += tt(request.size_bits);
    } else {
      duration += tt(request.size_bits);
      x.control_msgs += 1;
      x.control_bits += request.size_bits;
    }
    duration += tt(x.decision.response.size_bits);
    if (!model_response) {
      x.control_msgs += 1;
      x.control_bits += x.decision.response.size_bits;
    }
    if (x.decision.verdict == PsVerdict::send_model) {
      duration += tt(control);  // receipt acknowledgement
      x.control_msgs += 1;
      x.control_bits += control;
    }

    if (plan_.remaining_contact(from, now_) < duration) {
      if (x.decision.verdict == PsVerdict::send_model) release_in_flight();
      unreachable(from, std::move(request));
      return;
    }
    x.request = std::move(request);
    ps_busy_until_ = now_ + duration;
    exchange_ = std::move(x);
    push(ps_busy_until_, kNormal, ev::PsExchangeDone{});
  }

  void unreachable(NodeId from, Message request) {
    ++result_.traffic.ps_unreachable;
    deliver(from, protocol::event::PsUnreachable{std::move(request)});
  }

  // --- metrics --------------------------------------------------------------

  void record_epoch(int epoch) {
    const auto eval = learning::evaluate(global(), workload_.test);
    MetricsRecord r;
    r.sim_time_s = now_;
    r.epoch = epoch;
    r.test_accuracy = eval.accuracy;
    r.test_loss = eval.loss;
    r.ps_down_msgs = ps_down_msgs_;
    r.ps_down_bits = ps_down_bits_;
    r.ps_up_msgs = ps_up_msgs_;
    r.ps_up_bits = ps_up_bits_;
    r.isl_msgs = isl_msgs_;
    r.isl_bits = isl_bits_;
    r.fallback_hops = fallback_hops_;
    r.epoch_duration_s = now_ - last_epoch_end_;
    last_epoch_end_ = now_;
    result_.records.push_back(r);
    if (options_.keep_epoch_params) result_.epoch_params.push_back(global());
  }

  std::string describe_stall() const {
    std::ostringstream os;
    if (fedisl()) {
      os << "PS epoch " << ps_.epoch << " in " << (ps_.phase == protocol::PsPhase::distribution ? "distribution" : "aggregation")
         << ", planes sent " << ps_.sent_planes.size() << "/" << ps_.num_planes << ", received "
         << ps_.received_planes.size() << "/" << ps_.num_planes << "; satellites:";
      for (const auto& s : sats_)
        os << ' ' << s.id << '@' << s.epoch << ':' << phase_name(s.phase) << (s.uploads.empty() ? "" : "+upload");
    } else {
      os << "PS epoch " << base_ps_.epoch << ", sent " << base_ps_.sent.size() << ", received "
         << base_ps_.received.size() << "/" << base_ps_.num_satellites << "; satellites:";
      for (const auto& s : base_sats_) os << ' ' << s.id << '@' << s.epoch << ':' << phase_name(s.phase);
    }
    return os.str();
  }

  const ScenarioConfig& config_;
  const Workload& workload_;
  RunOptions options_;
  orbital::Constellation constellation_;
  ContactPlan plan_;
  int features_ = 0;
  int classes_ = 0;
  std::size_t dimension_ = 0;
  std::vector<double> compute_s_;
  std::vector<std::vector<double>> plane_compute_s_;

  std::priority_queue<Key, std::vector<Key>, std::greater<Key>> queue_;
  std::unordered_map<std::uint64_t, Payload> payloads_;
  std::uint64_t next_seq_ = 0;
  double now_ = 0;

  std::vector<protocol::SatState> sats_;
  std::vector<protocol::BaselineSatState> base_sats_;
  protocol::PsState ps_;
  protocol::BaselinePsState base_ps_;

  std::map<std::pair<NodeId, NodeId>, double> isl_busy_;
  std::map<std::uint64_t, Flight> flights_;
  std::uint64_t next_flight_ = 0;

  std::set<PendingConnection> pending_;
  std::unordered_map<std::uint64_t, Message> requests_;
  std::optional<Exchange> exchange_;
  double ps_busy_until_ = 0;

  std::int64_t ps_down_msgs_ = 0, ps_down_bits_ = 0, ps_up_msgs_ = 0, ps_up_bits_ = 0;
  std::int64_t isl_msgs_ = 0, isl_bits_ = 0, fallback_hops_ = 0;
  double last_epoch_end_ = 0;
  RunResult result_;
};

}  // namespace

RunResult run_scenario(const ScenarioConfig& config, const Workload& workload, const RunOptions& options) {
  validate(config);
  Engine engine(config, workload, options);
  return engine.run();
}

RunResult run_scenario(const ScenarioConfig& config) {
  validate(config);
  const Workload w = make_workload(config);
  return run_scenario(config, w);
}

}  // namespace orbitfl::sim
