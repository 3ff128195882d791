#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "pubflow/actors/broker.hpp"
#include "pubflow/actors/checker.hpp"
#include "pubflow/actors/coordinator.hpp"
#include "pubflow/actors/monitor.hpp"
#include "pubflow/actors/worker.hpp"
#include "pubflow/scenario.hpp"

namespace pubflow {

struct SimReport {
  Tick makespan = 0;  // tick of the closing Emergency, or the horizon
  bool completed = false;
  std::string outcome;  // "complete", "failed" or "horizon"
  std::size_t tasks_total = 0;
  int re_executions = 0;
  std::uint64_t messages_total = 0;
  std::map<std::string, std::uint64_t> messages_by_channel;
  std::map<std::string, double> per_worker_utilization;
  std::vector<std::string> engine_defaults;
};

inline Json report_to_json(const SimReport& r) {
  return Json{{"makespan", r.makespan},
              {"completed", r.completed},
              {"outcome", r.outcome},
              {"tasks_total", r.tasks_total},
              {"re_executions", r.re_executions},
              {"messages_total", r.messages_total},
              {"messages_by_channel", r.messages_by_channel},
              {"per_worker_utilization", r.per_worker_utilization},
              {"engine_defaults", r.engine_defaults}};
}

struct SimOptions {
  ActorConfig config;  // heartbeat is taken from the scenario
  std::shared_ptr<const KernelRegistry> kernels;
  std::shared_ptr<const ValidatorRegistry> validators;
  std::shared_ptr<Workspace> workspace;  // fresh in-memory store when null
};

struct SimResult {
  SimReport report;
  std::string log;
  std::shared_ptr<Workspace> workspace;
  std::vector<std::string> diagnostics;
};

/// Discrete-time run of one batch. Each tick advances the bus clock, applies
/// arrivals and fail-stop departures, then steps broker, coordinator, monitor,
/// checker and the live workers (in id order). Same inputs, same log bytes.
inline SimResult run_simulation(const WorkflowBatch& batch, Scenario scenario, SimOptions opt = {}) {
  if (!opt.kernels) {
    auto reg = std::make_shared<KernelRegistry>();
    register_builtin_kernels(*reg);
    opt.kernels = reg;
  }
  if (!opt.validators) opt.validators = std::make_shared<ValidatorRegistry>();
  SimResult res;
  res.workspace = opt.workspace ? opt.workspace : std::make_shared<Workspace>();
  res.report.engine_defaults = scenario.defaulted;
  ActorConfig cfg = opt.config;
  cfg.heartbeat = scenario.heartbeat;
  draw_crashes(scenario);

  InProcessBus bus;
  bus.set_log_sink([&res](const std::string& line) {
    res.log += line;
    res.log += '\n';
  });
  bus.set_time(0);

  Broker broker(bus);
  Coordinator coordinator(bus, cfg, res.workspace.get());
  Monitor monitor(bus, cfg);
  Checker checker(bus, opt.validators, res.workspace.get(), cfg);

  std::sort(scenario.workers.begin(), scenario.workers.end(),
            [](const WorkerSpec& a, const WorkerSpec& b) { return a.profile.worker_id < b.profile.worker_id; });
  struct Slot {
    const WorkerSpec* spec;
    std::unique_ptr<Worker> worker;
    bool active = false;
    Tick present = 0;
  };
  std::vector<Slot> slots;
  for (std::size_t i = 0; i < scenario.workers.size(); ++i) {
    const auto& spec = scenario.workers[i];
    WorkerOptions wo{scenario.volunteer_latency, scenario.volunteer_jitter, scenario.seed + 1 + i};
    slots.push_back(Slot{&spec, std::make_unique<Worker>(bus, spec.profile, opt.kernels, *res.workspace, cfg, wo)});
  }

  broker.submit(batch);

  Tick t = 0;
  for (; t < scenario.horizon; ++t) {
    bus.set_time(t);
    for (auto& s : slots) {
      if (s.spec->arrival == t) {
        s.worker->start(t);
        s.active = true;
      }
      const bool gone = (s.spec->crash && *s.spec->crash == t) || (s.spec->departure && *s.spec->departure == t);
      if (gone && s.active) {
        s.active = false;
        bus.unregister_actor(s.worker->id());
      }
    }
    broker.step(t);
    coordinator.step(t);
    monitor.step(t);
    checker.step(t);
    for (auto& s : slots) {
      if (!s.active) continue;
      s.worker->step(t);
      ++s.present;
    }
    if (coordinator.halted()) break;
  }

  auto& r = res.report;
  r.completed = coordinator.outcome() == std::optional<std::string>("complete");
  r.outcome = coordinator.outcome().value_or("horizon");
  r.makespan = coordinator.halted() ? t : scenario.horizon;
  r.tasks_total = coordinator.state().state_of.size();
  r.re_executions = coordinator.re_executions();
  r.messages_total = bus.last_seq();
  for (const auto& [c, n] : bus.counts_by_channel()) r.messages_by_channel[std::string(channel_name(c))] = n;
  for (const auto& s : slots)
    r.per_worker_utilization[s.worker->id()] =
        s.present == 0 ? 0.0 : static_cast<double>(s.worker->busy_ticks()) / static_cast<double>(s.present);

  for (const auto& d : coordinator.diagnostics()) res.diagnostics.push_back("coordinator: " + d);
  for (const auto& d : checker.diagnostics()) res.diagnostics.push_back("checker: " + d);
  for (const auto& s : slots)
    for (const auto& d : s.worker->diagnostics()) res.diagnostics.push_back(s.worker->id() + ": " + d);
  return res;
}

/// Two runs replay each other when their logs are byte-identical.
inline bool replay_check(const std::string& a, const std::string& b) { return a == b; }

}  // namespace pubflow
