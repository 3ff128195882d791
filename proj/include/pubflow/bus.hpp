#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pubflow/errors.hpp"

namespace pubflow {

using Json = nlohmann::json;
using ActorId = std::string;
using Tick = std::int64_t;
using Seq = std::uint64_t;

/// The closed channel catalog. The first seven carry the task lifecycle; DLC
/// and EM carry data-life-cycle and execution-model traffic.
enum class Channel {
  WaitingTasks,
  TasksToDo,
  TasksInProgress,
  TasksToCheck,
  FinishedTasks,
  VolunteerWorkers,
  Emergency,
  DLC,
  EM,
};

inline constexpr std::array<Channel, 9> kAllChannels = {
    Channel::WaitingTasks,  Channel::TasksToDo,        Channel::TasksInProgress,
    Channel::TasksToCheck,  Channel::FinishedTasks,    Channel::VolunteerWorkers,
    Channel::Emergency,     Channel::DLC,              Channel::EM};

inline std::string_view channel_name(Channel c) {
  switch (c) {
    case Channel::WaitingTasks: return "WaitingTasks";
    case Channel::TasksToDo: return "TasksToDo";
    case Channel::TasksInProgress: return "TasksInProgress";
    case Channel::TasksToCheck: return "TasksToCheck";
    case Channel::FinishedTasks: return "FinishedTasks";
    case Channel::VolunteerWorkers: return "VolunteerWorkers";
    case Channel::Emergency: return "Emergency";
    case Channel::DLC: return "DLC";
    case Channel::EM: return "EM";
  }
  return "?";
}

inline Channel parse_channel(std::string_view name) {
  for (Channel c : kAllChannels)
    if (channel_name(c) == name) return c;
  throw UnknownChannel("no channel named '" + std::string(name) + "'");
}

struct Envelope {
  Channel channel = Channel::WaitingTasks;
  std::string kind;
  Seq seq = 0;
  ActorId sender;
  Tick ts = 0;
  Json payload = Json::object();

  bool operator==(const Envelope&) const = default;
};

// ---------------------------------------------------------------------------
// Payload schemas

namespace bus_detail {

enum class Field { String, Integer, Boolean, Array, Object, Number };

struct FieldSpec {
  const char* name;
  Field type;
};

inline bool matches(const Json& v, Field f) {
  switch (f) {
    case Field::String: return v.is_string();
    case Field::Integer: return v.is_number_integer();
    case Field::Boolean: return v.is_boolean();
    case Field::Array: return v.is_array();
    case Field::Object: return v.is_object();
    case Field::Number: return v.is_number();
  }
  return false;
}

inline const std::map<std::string, std::vector<FieldSpec>, std::less<>>& schemas() {
  using F = Field;
  static const std::map<std::string, std::vector<FieldSpec>, std::less<>> s = {
      {"task", {{"task_id", F::String}, {"attempt", F::Integer}}},
      {"assignment", {{"task_id", F::String}, {"worker_id", F::String}, {"attempt", F::Integer}}},
      {"volunteer",
       {{"worker_id", F::String}, {"task_id", F::String}, {"attempt", F::Integer}, {"profile", F::Object}}},
      {"started", {{"task_id", F::String}, {"worker_id", F::String}, {"attempt", F::Integer}}},
      {"heartbeat", {{"task_id", F::String}, {"worker_id", F::String}, {"attempt", F::Integer}}},
      {"result",
       {{"task_id", F::String}, {"attempt", F::Integer}, {"outputs", F::Array}, {"exit_status", F::Integer}}},
      {"verdict", {{"task_id", F::String}, {"attempt", F::Integer}, {"ok", F::Boolean}}},
      {"emergency", {{"reason", F::String}, {"batch_id", F::String}}},
      {"dlc", {{"task_id", F::String}, {"event", F::String}}},
      {"em",
       {{"worker_id", F::String},
        {"logical_gpus", F::Integer},
        {"physical_gpus", F::Integer},
        {"scheduling_policy", F::String},
        {"performance_model_available", F::Boolean}}},
  };
  return s;
}

}  // namespace bus_detail

/// Throws SchemaError when `payload` does not carry the fields `kind` needs.
inline void validate_payload(std::string_view kind, const Json& payload) {
  const auto& all = bus_detail::schemas();
  auto it = all.find(kind);
  if (it == all.end()) throw SchemaError("unknown message kind '" + std::string(kind) + "'");
  if (!payload.is_object()) throw SchemaError("payload of '" + std::string(kind) + "' must be an object");
  for (const auto& f : it->second) {
    auto v = payload.find(f.name);
    if (v == payload.end() || !bus_detail::matches(*v, f.type))
      throw SchemaError("payload of '" + std::string(kind) + "' lacks a valid '" + f.name + "'");
  }
}

inline nlohmann::ordered_json envelope_to_json(const Envelope& e) {
  nlohmann::ordered_json j;
  j["seq"] = e.seq;
  j["ts"] = e.ts;
  j["channel"] = std::string(channel_name(e.channel));
  j["kind"] = e.kind;
  j["sender"] = e.sender;
  j["payload"] = e.payload;
  return j;
}

inline Envelope envelope_from_json(const Json& j) {
  try {
    Envelope e;
    e.seq = j.at("seq").get<Seq>();
    e.ts = j.at("ts").get<Tick>();
    e.channel = parse_channel(j.at("channel").get<std::string>());
    e.kind = j.at("kind").get<std::string>();
    e.sender = j.at("sender").get<std::string>();
    e.payload = j.at("payload");
    return e;
  } catch (const Json::exception& ex) {
    throw MalformedLog(std::string("bad envelope: ") + ex.what());
  } catch (const UnknownChannel& ex) {
    throw MalformedLog(std::string("bad envelope: ") + ex.what());
  }
}

// ---------------------------------------------------------------------------
// Transport boundary

struct Subscription {
  ActorId actor;
  Channel channel;
};

/// The whole bus contract. A networked broker would implement the same four
/// calls; actors only ever talk to this interface.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void register_actor(const ActorId& actor) = 0;
  virtual Subscription subscribe(const ActorId& actor, Channel channel) = 0;
  virtual Seq publish(const ActorId& sender, Channel channel, std::string_view kind, Json payload) = 0;
  virtual std::vector<Envelope> drain(const ActorId& actor) = 0;
  virtual Tick now() const = 0;
};

/// In-process transport with a single global sequence counter. Every call is
/// serialized under one mutex so concurrent actors observe one total order.
class InProcessBus final : public Transport {
 public:
  using LineSink = std::function<void(const std::string&)>;

  InProcessBus() = default;
  explicit InProcessBus(LineSink sink) : sink_(std::move(sink)) {}

  void set_log_sink(LineSink sink) {
    std::lock_guard lock(mu_);
    sink_ = std::move(sink);
  }

  void register_actor(const ActorId& actor) override {
    std::lock_guard lock(mu_);
    mailboxes_.try_emplace(actor);
  }

  // Removes the actor, its subscriptions and anything still queued for it.
  void unregister_actor(const ActorId& actor) {
    std::lock_guard lock(mu_);
    mailboxes_.erase(actor);
    for (auto& [_, subs] : subscribers_) subs.erase(actor);
  }

  Subscription subscribe(const ActorId& actor, Channel channel) override {
    std::lock_guard lock(mu_);
    if (!mailboxes_.contains(actor)) throw UnknownActor("actor '" + actor + "' is not registered");
    subscribers_[channel].insert(actor);
    return {actor, channel};
  }

  Seq publish(const ActorId& sender, Channel channel, std::string_view kind, Json payload) override {
    validate_payload(kind, payload);
    std::lock_guard lock(mu_);
    Envelope e{channel, std::string(kind), ++next_seq_, sender, clock_ ? clock_() : tick_, std::move(payload)};
    ++by_channel_[channel];
    if (sink_) sink_(envelope_to_json(e).dump());
    if (auto it = subscribers_.find(channel); it != subscribers_.end())
      for (const auto& actor : it->second) mailboxes_[actor].push_back(e);
    return e.seq;
  }

  Seq publish(const ActorId& sender, std::string_view channel, std::string_view kind, Json payload) {
    return publish(sender, parse_channel(channel), kind, std::move(payload));
  }

  std::vector<Envelope> drain(const ActorId& actor) override {
    std::lock_guard lock(mu_);
    auto it = mailboxes_.find(actor);
    if (it == mailboxes_.end()) throw UnknownActor("actor '" + actor + "' is not registered");
    std::vector<Envelope> out(std::make_move_iterator(it->second.begin()),
                              std::make_move_iterator(it->second.end()));
    it->second.clear();
    return out;
  }

  // Logical time for simulation; a live runner installs a clock instead.
  void set_time(Tick t) {
    std::lock_guard lock(mu_);
    tick_ = t;
  }
  void set_clock(std::function<Tick()> clock) {
    std::lock_guard lock(mu_);
    clock_ = std::move(clock);
  }
  Tick now() const override {
    std::lock_guard lock(mu_);
    return clock_ ? clock_() : tick_;
  }

  Seq last_seq() const {
    std::lock_guard lock(mu_);
    return next_seq_;
  }
  std::map<Channel, std::uint64_t> counts_by_channel() const {
    std::lock_guard lock(mu_);
    return by_channel_;
  }

 private:
  mutable std::mutex mu_;
  Seq next_seq_ = 0;
  Tick tick_ = 0;
  std::function<Tick()> clock_;
  LineSink sink_;
  std::map<ActorId, std::deque<Envelope>> mailboxes_;
  std::map<Channel, std::set<ActorId>> subscribers_;
  std::map<Channel, std::uint64_t> by_channel_;
};

}  // namespace pubflow
