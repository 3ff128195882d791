#pragma once

#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "pubflow/actors/config.hpp"

namespace pubflow {

struct WorkerSpec {
  WorkerProfile profile;
  Tick arrival = 0;
  std::optional<Tick> departure;  // leaves without notice
  std::optional<Tick> crash;
  double crash_probability = 0.0;  // used only when no crash tick is given
};

struct Scenario {
  std::vector<WorkerSpec> workers;
  std::uint64_t seed = 0;
  Tick horizon = 1000;
  HeartbeatConfig heartbeat;
  Tick volunteer_latency = 0;
  Tick volunteer_jitter = 0;
  std::vector<std::string> defaulted;  // top-level fields filled from defaults
};

inline Scenario scenario_from_json(const Json& j) {
  Scenario s;
  if (!j.is_object()) throw SchemaError("scenario must be a JSON object");
  auto take = [&](const char* key, auto& field) {
    if (j.contains(key)) {
      try {
        field = j[key].get<std::decay_t<decltype(field)>>();
      } catch (const Json::exception&) {
        throw SchemaError(std::string("scenario field '") + key + "' has the wrong type");
      }
    } else {
      s.defaulted.push_back(key);
    }
  };
  take("seed", s.seed);
  take("horizon", s.horizon);
  take("volunteer_latency", s.volunteer_latency);
  take("volunteer_jitter", s.volunteer_jitter);
  if (j.contains("heartbeat")) {
    const Json& h = j["heartbeat"];
    s.heartbeat.H = h.value("H", s.heartbeat.H);
    s.heartbeat.k = h.value("k", s.heartbeat.k);
  } else {
    s.defaulted.push_back("heartbeat");
  }
  if (s.horizon <= 0) throw SchemaError("horizon must be positive");
  if (s.volunteer_latency < 0 || s.volunteer_jitter < 0) throw SchemaError("volunteer delays must be >= 0");
  if (s.heartbeat.H < 1 || s.heartbeat.k < 2) throw SchemaError("heartbeat needs H >= 1 and k >= 2");
  if (!j.contains("workers") || !j["workers"].is_array()) throw SchemaError("scenario needs a 'workers' array");

  std::set<std::string> seen;
  for (const auto& w : j["workers"]) {
    WorkerSpec spec;
    spec.profile = profile_from_json(w);
    try {
      spec.arrival = w.value("arrival", Tick{0});
      if (w.contains("departure") && !w["departure"].is_null()) spec.departure = w["departure"].get<Tick>();
      if (w.contains("crash") && !w["crash"].is_null()) spec.crash = w["crash"].get<Tick>();
      spec.crash_probability = w.value("crash_probability", 0.0);
      if (w.contains("gpus")) spec.profile.em_probe = em_from_json(w["gpus"]);
    } catch (const Json::exception& e) {
      throw SchemaError("worker '" + spec.profile.worker_id + "': " + e.what());
    }
    const auto& id = spec.profile.worker_id;
    if (!seen.insert(id).second) throw SchemaError("duplicate worker id '" + id + "'");
    if (spec.arrival < 0) throw SchemaError("worker '" + id + "': arrival must be >= 0");
    if (spec.departure && *spec.departure <= spec.arrival)
      throw SchemaError("worker '" + id + "': departure must come after arrival");
    if (spec.crash && *spec.crash <= spec.arrival)
      throw SchemaError("worker '" + id + "': crash must come after arrival");
    if (spec.crash_probability < 0 || spec.crash_probability > 1)
      throw SchemaError("worker '" + id + "': crash_probability must lie in [0,1]");
    s.workers.push_back(std::move(spec));
  }
  return s;
}

inline Json scenario_to_json(const Scenario& s) {
  Json workers = Json::array();
  for (const auto& w : s.workers) {
    Json j = profile_to_json(w.profile);
    j.erase("alive");
    j["arrival"] = w.arrival;
    if (w.departure) j["departure"] = *w.departure;
    if (w.crash) j["crash"] = *w.crash;
    if (w.crash_probability > 0) j["crash_probability"] = w.crash_probability;
    if (w.profile.em_probe) j["gpus"] = em_to_json(*w.profile.em_probe);
    workers.push_back(std::move(j));
  }
  return Json{{"seed", s.seed},
              {"horizon", s.horizon},
              {"heartbeat", {{"H", s.heartbeat.H}, {"k", s.heartbeat.k}}},
              {"volunteer_latency", s.volunteer_latency},
              {"volunteer_jitter", s.volunteer_jitter},
              {"workers", std::move(workers)}};
}

/// Turns crash probabilities into concrete crash ticks, drawing in worker
/// order from the scenario seed.
inline void draw_crashes(Scenario& s) {
  std::mt19937_64 rng(s.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& w : s.workers) {
    if (w.crash || w.crash_probability <= 0) continue;
    if (u(rng) < w.crash_probability) {
      const Tick span = std::max<Tick>(1, s.horizon - w.arrival - 1);
      w.crash = w.arrival + 1 + static_cast<Tick>(rng() % static_cast<std::uint64_t>(span));
    }
  }
}

}  // namespace pubflow
