#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "pubflow/bus.hpp"
#include "pubflow/dag.hpp"
#include "pubflow/em.hpp"

namespace pubflow {

struct SlaPolicy {
  double w_r = 0.7;    // weight of reliability
  double w_s = 0.3;    // weight of normalised speed
  double s_cap = 4.0;  // speeds above this score the same
};

struct HeartbeatConfig {
  Tick H = 5;  // heartbeat period
  int k = 3;   // timeout multiplier
};

/// Every protocol constant, overridable from the actor configuration file.
struct ActorConfig {
  SlaPolicy sla;
  HeartbeatConfig heartbeat;
  int max_attempts_default = 3;

  Tick timeout() const { return heartbeat.H * heartbeat.k; }
  // How long an unassigned ToDo task or an unanswered volunteer waits before
  // the coordinator re-announces it / the worker gives up on it.
  Tick announce_period() const { return timeout(); }
};

inline void validate_config(const ActorConfig& c) {
  if (c.heartbeat.H < 1) throw SchemaError("heartbeat.H must be >= 1");
  if (c.heartbeat.k < 2) throw SchemaError("heartbeat.k must be >= 2");
  if (c.sla.w_r < 0 || c.sla.w_s < 0) throw SchemaError("SLA weights must be >= 0");
  if (!(c.sla.s_cap > 0)) throw SchemaError("sla.s_cap must be > 0");
  if (c.max_attempts_default < 1) throw SchemaError("max_attempts_default must be >= 1");
}

inline ActorConfig config_from_json(const Json& j) {
  ActorConfig c;
  try {
    if (j.contains("sla")) {
      const Json& s = j["sla"];
      c.sla.w_r = s.value("w_r", c.sla.w_r);
      c.sla.w_s = s.value("w_s", c.sla.w_s);
      c.sla.s_cap = s.value("s_cap", c.sla.s_cap);
    }
    if (j.contains("heartbeat")) {
      c.heartbeat.H = j["heartbeat"].value("H", c.heartbeat.H);
      c.heartbeat.k = j["heartbeat"].value("k", c.heartbeat.k);
    }
    c.max_attempts_default = j.value("max_attempts_default", c.max_attempts_default);
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("bad actor config: ") + e.what());
  }
  validate_config(c);
  return c;
}

inline Json config_to_json(const ActorConfig& c) {
  return Json{{"sla", {{"w_r", c.sla.w_r}, {"w_s", c.sla.w_s}, {"s_cap", c.sla.s_cap}}},
              {"heartbeat", {{"H", c.heartbeat.H}, {"k", c.heartbeat.k}}},
              {"max_attempts_default", c.max_attempts_default}};
}

// ---------------------------------------------------------------------------
// Workers and SLA selection

struct WorkerProfile {
  std::string worker_id;
  std::set<std::string> capabilities;
  double speed = 1.0;        // work units per tick
  double reliability = 1.0;  // historical success fraction
  bool alive = true;
  std::optional<EMConfig> em_probe;  // device report, when the node has one

  bool operator==(const WorkerProfile&) const = default;
};

inline Json profile_to_json(const WorkerProfile& p) {
  Json j{{"worker_id", p.worker_id},
         {"capabilities", p.capabilities},
         {"speed", p.speed},
         {"reliability", p.reliability},
         {"alive", p.alive}};
  return j;
}

inline WorkerProfile profile_from_json(const Json& j) {
  try {
    WorkerProfile p;
    p.worker_id = j.at("worker_id").get<std::string>();
    if (j.contains("capabilities")) p.capabilities = j["capabilities"].get<std::set<std::string>>();
    p.speed = j.value("speed", 1.0);
    p.reliability = j.value("reliability", 1.0);
    p.alive = j.value("alive", true);
    if (j.contains("em")) p.em_probe = em_from_json(j["em"]);
    if (!(p.speed > 0)) throw SchemaError("worker '" + p.worker_id + "': speed must be > 0");
    if (p.reliability < 0 || p.reliability > 1)
      throw SchemaError("worker '" + p.worker_id + "': reliability must lie in [0,1]");
    return p;
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("bad worker profile: ") + e.what());
  }
}

inline double sla_score(const WorkerProfile& w, const SlaPolicy& policy) {
  return policy.w_r * w.reliability + policy.w_s * std::min(w.speed, policy.s_cap) / policy.s_cap;
}

inline bool satisfies(const WorkerProfile& w, const std::set<std::string>& required_caps) {
  return std::includes(w.capabilities.begin(), w.capabilities.end(), required_caps.begin(), required_caps.end());
}

/// Best eligible volunteer: alive, carrying every required capability, with
/// the highest SLA score; ties go to the smallest worker id. nullopt means no
/// eligible worker, and the task keeps waiting for more volunteers.
inline std::optional<std::string> select_worker(const Task& task, std::span<const WorkerProfile> volunteers,
                                                const SlaPolicy& policy = {}) {
  const WorkerProfile* best = nullptr;
  double best_score = 0.0;
  for (const auto& w : volunteers) {
    if (!w.alive || !satisfies(w, task.required_caps)) continue;
    const double s = sla_score(w, policy);
    if (!best || s > best_score || (s == best_score && w.worker_id < best->worker_id)) {
      best = &w;
      best_score = s;
    }
  }
  if (!best) return std::nullopt;
  return best->worker_id;
}

}  // namespace pubflow
