#pragma once

#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pubflow/pubflow.hpp"

namespace pubflow::testing {

inline Task make_task(const std::string& id, std::set<TaskId> deps = {}, std::string kernel = "noop") {
  Task t;
  t.id = id;
  t.kernel.name = std::move(kernel);
  t.deps = std::move(deps);
  return t;
}

inline WorkflowBatch make_batch(std::vector<Task> tasks, std::string id = "b") {
  WorkflowBatch b;
  b.batch_id = std::move(id);
  for (auto& t : tasks) b.tasks.emplace(t.id, std::move(t));
  return b;
}

inline WorkflowBatch diamond() {
  return make_batch({make_task("A"), make_task("B", {"A"}), make_task("C", {"A"}), make_task("D", {"B", "C"})},
                    "diamond");
}

inline std::string node_name(int i) {
  std::string s = "n";
  if (i < 10) s += '0';
  return s + std::to_string(i);
}

/// Random DAG over n nodes: each forward pair (i, j), i < j, is an edge with
/// probability p.
inline WorkflowBatch random_dag(std::mt19937_64& rng, int n, double p) {
  std::bernoulli_distribution edge(p);
  std::vector<Task> tasks;
  for (int j = 0; j < n; ++j) {
    std::set<TaskId> deps;
    for (int i = 0; i < j; ++i)
      if (edge(rng)) deps.insert(node_name(i));
    tasks.push_back(make_task(node_name(j), deps));
  }
  return make_batch(std::move(tasks), "random");
}

inline WorkerProfile worker(const std::string& id, double speed = 1.0, double reliability = 1.0,
                            std::set<std::string> caps = {"cpu"}) {
  WorkerProfile w;
  w.worker_id = id;
  w.speed = speed;
  w.reliability = reliability;
  w.capabilities = std::move(caps);
  return w;
}

inline WorkerSpec arrives(WorkerProfile p, Tick at = 0) {
  WorkerSpec s;
  s.profile = std::move(p);
  s.arrival = at;
  return s;
}

inline Scenario scenario(std::vector<WorkerSpec> workers, Tick H = 5, int k = 3, std::uint64_t seed = 1,
                         Tick horizon = 2000) {
  Scenario s;
  s.workers = std::move(workers);
  s.heartbeat = {H, k};
  s.seed = seed;
  s.horizon = horizon;
  return s;
}

inline std::shared_ptr<const KernelRegistry> adapt_kernels() {
  return std::make_shared<KernelRegistry>(adapt::default_registry());
}

inline SimOptions adapt_options() {
  SimOptions o;
  o.kernels = adapt_kernels();
  return o;
}

/// Churny population for campaign runs. Worker "w0" arrives at tick 0 and
/// never leaves, so every scenario can finish.
inline Scenario random_scenario(std::mt19937_64& rng, Tick horizon = 5000) {
  const std::vector<double> speeds{0.5, 1.0, 2.0, 3.0};
  Scenario s;
  s.seed = rng();
  s.horizon = horizon;
  s.heartbeat = {static_cast<Tick>(2 + rng() % 4), static_cast<int>(2 + rng() % 2)};
  s.volunteer_latency = static_cast<Tick>(rng() % 3);
  s.volunteer_jitter = static_cast<Tick>(rng() % 4);
  const int n = 2 + static_cast<int>(rng() % 7);
  for (int i = 0; i < n; ++i) {
    WorkerSpec w;
    w.profile = worker("w" + std::to_string(i), speeds[rng() % speeds.size()],
                       0.5 + static_cast<double>(rng() % 51) / 100.0);
    if (i > 0) {
      w.arrival = static_cast<Tick>(rng() % 30);
      switch (rng() % 4) {
        case 0: w.crash = w.arrival + 1 + static_cast<Tick>(rng() % 200); break;
        case 1: w.departure = w.arrival + 1 + static_cast<Tick>(rng() % 200); break;
        case 2: w.crash_probability = 0.5; break;
        default: break;
      }
    }
    s.workers.push_back(std::move(w));
  }
  return s;
}

/// Envelopes of one kind, in log order.
inline std::vector<Envelope> of_kind(const std::vector<Envelope>& log, const std::string& kind) {
  std::vector<Envelope> out;
  for (const auto& e : log)
    if (e.kind == kind) out.push_back(e);
  return out;
}

inline std::vector<Envelope> for_task(const std::vector<Envelope>& log, const std::string& kind, const TaskId& id) {
  std::vector<Envelope> out;
  for (const auto& e : log)
    if (e.kind == kind && e.payload.value("task_id", "") == id) out.push_back(e);
  return out;
}

}  // namespace pubflow::testing
