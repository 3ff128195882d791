#pragma once

// Execution-model negotiation: device-count sanity and scheduling policy
// selection for a node, driven by the task workspace map below.

#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pubflow/errors.hpp"

namespace pubflow {

using Json = nlohmann::json;

enum class SchedulingPolicy { DataAware, InMemory };

inline const char* to_string(SchedulingPolicy p) { return p == SchedulingPolicy::DataAware ? "data_aware" : "in_memory"; }

inline SchedulingPolicy parse_policy(const std::string& s) {
  if (s == "data_aware") return SchedulingPolicy::DataAware;
  if (s == "in_memory") return SchedulingPolicy::InMemory;
  throw SchemaError("unknown scheduling policy '" + s + "'");
}

struct EMConfig {
  int logical_gpus = 0;
  int physical_gpus = 0;
  SchedulingPolicy scheduling_policy = SchedulingPolicy::InMemory;
  bool performance_model_available = false;

  bool operator==(const EMConfig&) const = default;
};

/// The per-task workspace map: the DLC branch reacts to a transmission
/// failure with drop/remove/reload, the EM branch fixes device counts and
/// picks a scheduling policy. Kept as data; the policies below follow it.
inline const Json& workspace_map() {
  static const Json map = {
      {"DLC", {{"?transmission", {"drop", "remove", "reload"}}}},
      {"EM",
       {{"?GPU", "fix_number_devices"},
        {"?Scheduling", {{"data_aware", "choose_data_aware"}, {"in_memory", "choose_in_memory"}}}}},
  };
  return map;
}

struct Negotiation {
  EMConfig config;
  std::vector<std::string> leaves;  // map leaves that fired
};

inline Negotiation em_negotiate_traced(EMConfig probe) {
  const Json& em = workspace_map()["EM"];
  Negotiation n{probe, {}};
  if (n.config.logical_gpus > n.config.physical_gpus) {
    n.config.logical_gpus = n.config.physical_gpus;
    n.leaves.push_back(em["?GPU"].get<std::string>());
  }
  n.config.scheduling_policy =
      probe.performance_model_available ? SchedulingPolicy::DataAware : SchedulingPolicy::InMemory;
  n.leaves.push_back(em["?Scheduling"][to_string(n.config.scheduling_policy)].get<std::string>());
  return n;
}

inline EMConfig em_negotiate(EMConfig probe) { return em_negotiate_traced(probe).config; }

inline Json em_to_json(const EMConfig& c) {
  return Json{{"logical_gpus", c.logical_gpus},
              {"physical_gpus", c.physical_gpus},
              {"scheduling_policy", to_string(c.scheduling_policy)},
              {"performance_model_available", c.performance_model_available}};
}

inline EMConfig em_from_json(const Json& j) {
  try {
    EMConfig c;
    c.logical_gpus = j.value("logical_gpus", 0);
    c.physical_gpus = j.value("physical_gpus", 0);
    c.performance_model_available = j.value("performance_model_available", false);
    if (j.contains("scheduling_policy")) c.scheduling_policy = parse_policy(j["scheduling_policy"].get<std::string>());
    if (c.logical_gpus < 0 || c.physical_gpus < 0) throw SchemaError("gpu counts must be >= 0");
    return c;
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("bad EM config: ") + e.what());
  }
}

inline constexpr const char* kGpuDevicesEnv = "PUBFLOW_GPU_DEVICES";

/// Live-mode probe: the logical device count comes from PUBFLOW_GPU_DEVICES
/// (0 when unset or unparsable).
inline EMConfig probe_environment(int physical_gpus, bool performance_model_available) {
  EMConfig c;
  c.physical_gpus = physical_gpus;
  c.performance_model_available = performance_model_available;
  if (const char* v = std::getenv(kGpuDevicesEnv)) {
    char* end = nullptr;
    long n = std::strtol(v, &end, 10);
    if (end != v && *end == '\0' && n >= 0) c.logical_gpus = static_cast<int>(n);
  }
  return c;
}

}  // namespace pubflow
