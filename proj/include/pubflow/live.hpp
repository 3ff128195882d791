#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "pubflow/simulator.hpp"

namespace pubflow {

struct LiveOptions {
  std::chrono::milliseconds tick{2};      // wall time per protocol tick
  std::chrono::milliseconds timeout{20000};
  std::shared_ptr<const KernelRegistry> kernels;
  std::shared_ptr<Workspace> workspace;
};

struct LiveResult {
  bool completed = false;
  std::string outcome;
  std::string log;
  std::shared_ptr<Workspace> workspace;
};

/// Runs the actors concurrently, one thread each, against a shared bus whose
/// clock follows wall time. Ordering is whatever the scheduler produces.
inline LiveResult run_live(const WorkflowBatch& batch, const std::vector<WorkerProfile>& workers, ActorConfig cfg,
                           LiveOptions opt = {}) {
  if (!opt.kernels) {
    auto reg = std::make_shared<KernelRegistry>();
    register_builtin_kernels(*reg);
    opt.kernels = reg;
  }
  LiveResult res;
  res.workspace = opt.workspace ? opt.workspace : std::make_shared<Workspace>();

  std::mutex log_mu;
  InProcessBus bus;
  bus.set_log_sink([&](const std::string& line) {
    std::lock_guard lock(log_mu);
    res.log += line;
    res.log += '\n';
  });
  const auto t0 = std::chrono::steady_clock::now();
  const auto tick = opt.tick;
  bus.set_clock([t0, tick] {
    return static_cast<Tick>((std::chrono::steady_clock::now() - t0) / tick);
  });

  Broker broker(bus);
  Coordinator coordinator(bus, cfg, res.workspace.get());
  Monitor monitor(bus, cfg);
  Checker checker(bus, std::make_shared<ValidatorRegistry>(), res.workspace.get(), cfg);
  std::vector<std::unique_ptr<Worker>> pool;
  for (std::size_t i = 0; i < workers.size(); ++i)
    pool.push_back(std::make_unique<Worker>(bus, workers[i], opt.kernels, *res.workspace, cfg, WorkerOptions{0, 0, i}));
  for (auto& w : pool) w->start(bus.now());

  broker.submit(batch);

  std::atomic<bool> stop{false};
  const auto deadline = t0 + opt.timeout;
  auto loop = [&](std::function<void(Tick)> step, std::function<bool()> halted) {
    return std::thread([&, step = std::move(step), halted = std::move(halted)] {
      Tick last = -1;
      while (!stop.load() && !halted() && std::chrono::steady_clock::now() < deadline) {
        Tick now = bus.now();
        if (now != last) {
          step(now);
          last = now;
        }
        std::this_thread::sleep_for(tick / 4);
      }
    });
  };

  std::vector<std::thread> threads;
  threads.push_back(loop([&](Tick t) { broker.step(t); }, [&] { return broker.halted(); }));
  threads.push_back(loop([&](Tick t) { monitor.step(t); }, [&] { return monitor.halted(); }));
  threads.push_back(loop([&](Tick t) { checker.step(t); }, [&] { return checker.halted(); }));
  for (auto& w : pool) {
    Worker* p = w.get();
    threads.push_back(loop([p](Tick t) { p->step(t); }, [p] { return p->halted(); }));
  }
  // The coordinator runs on this thread and ends the run.
  Tick last = -1;
  while (!coordinator.halted() && std::chrono::steady_clock::now() < deadline) {
    Tick now = bus.now();
    if (now != last) {
      coordinator.step(now);
      last = now;
    }
    std::this_thread::sleep_for(tick / 4);
  }
  // Let the other actors see the Emergency before stopping them.
  std::this_thread::sleep_for(tick * 4);
  stop = true;
  for (auto& t : threads) t.join();

  res.outcome = coordinator.outcome().value_or("timeout");
  res.completed = res.outcome == "complete";
  return res;
}

}  // namespace pubflow
