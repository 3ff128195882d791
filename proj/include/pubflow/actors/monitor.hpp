#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "pubflow/actors/config.hpp"

namespace pubflow {

struct Watch {
  ActorId worker;
  int attempt = 1;
  Tick last_heartbeat = 0;
};

struct MonitorState {
  std::map<TaskId, Watch> watch;
  HeartbeatConfig heartbeat;
};

/// Failure detector. Watches every started task and re-publishes it as a new
/// attempt when its worker stays silent for longer than k*H.
class Monitor {
 public:
  static constexpr const char* kDefaultId = "monitor";

  Monitor(Transport& bus, ActorConfig cfg, ActorId id = kDefaultId) : bus_(bus), id_(std::move(id)) {
    state_.heartbeat = cfg.heartbeat;
    bus_.register_actor(id_);
    for (Channel c : {Channel::TasksToDo, Channel::TasksInProgress, Channel::TasksToCheck, Channel::FinishedTasks,
                      Channel::Emergency})
      bus_.subscribe(id_, c);
  }

  const ActorId& id() const { return id_; }

  void step(Tick now) {
    if (halted_) return;
    for (const auto& env : bus_.drain(id_)) {
      if (env.channel == Channel::Emergency) {
        halted_ = true;
        return;
      }
      handle(env);
    }
    tick(now);
  }

  /// Fires the timeouts due at `now`; returns the sequence numbers published.
  std::vector<Seq> tick(Tick now) {
    std::vector<Seq> out;
    const Tick limit = state_.heartbeat.H * state_.heartbeat.k;
    std::vector<TaskId> expired;
    for (const auto& [id, w] : state_.watch)
      if (now - w.last_heartbeat > limit) expired.push_back(id);
    for (const auto& id : expired) {
      const Watch w = state_.watch.at(id);
      state_.watch.erase(id);
      const int next = w.attempt + 1;
      latest_[id] = next;
      Json payload{{"task_id", id}, {"attempt", next}, {"reason", "timeout"}};
      if (auto d = defs_.find(id); d != defs_.end()) payload["task"] = d->second;
      out.push_back(bus_.publish(id_, Channel::TasksToDo, "task", std::move(payload)));
      out.push_back(bus_.publish(id_, Channel::DLC, "dlc",
                                 Json{{"task_id", id},
                                      {"event", "transmission_failure"},
                                      {"attempt", w.attempt},
                                      {"worker_id", w.worker}}));
    }
    return out;
  }

  const MonitorState& state() const { return state_; }
  bool halted() const { return halted_; }

 private:
  void handle(const Envelope& env) {
    const Json& p = env.payload;
    const auto id = p["task_id"].get<std::string>();
    const int attempt = p["attempt"].get<int>();
    if (env.kind == "task") {
      if (p.contains("task")) defs_[id] = p["task"];
      latest_[id] = std::max(latest_[id], attempt);
    } else if (env.kind == "started") {
      if (finished_.contains(id) || attempt < latest_[id]) return;
      state_.watch[id] = Watch{p["worker_id"].get<std::string>(), attempt, env.ts};
    } else if (env.kind == "heartbeat") {
      auto it = state_.watch.find(id);
      if (it != state_.watch.end() && it->second.worker == p["worker_id"].get<std::string>() &&
          it->second.attempt == attempt)
        it->second.last_heartbeat = std::max(it->second.last_heartbeat, env.ts);
    } else if (env.kind == "result") {
      auto it = state_.watch.find(id);
      if (it != state_.watch.end() && it->second.attempt == attempt) state_.watch.erase(it);
    } else if (env.kind == "verdict") {
      state_.watch.erase(id);
      finished_.insert(id);
    }
  }

  Transport& bus_;
  ActorId id_;
  MonitorState state_;
  std::map<TaskId, Json> defs_;
  std::map<TaskId, int> latest_;
  std::set<TaskId> finished_;
  bool halted_ = false;
};

}  // namespace pubflow
