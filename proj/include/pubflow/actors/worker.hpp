#pragma once

#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pubflow/actors/config.hpp"
#include "pubflow/kernels.hpp"

namespace pubflow {

struct WorkerOptions {
  Tick volunteer_latency = 0;  // ticks between seeing a task and volunteering
  Tick volunteer_jitter = 0;   // extra uniform delay in [0, jitter]
  std::uint64_t seed = 0;
};

/// A volunteer node. It offers itself for open tasks one at a time, runs the
/// task it is assigned and reports the result; it never pushes work onto
/// anyone else.
class Worker {
 public:
  Worker(Transport& bus, WorkerProfile profile, std::shared_ptr<const KernelRegistry> registry, Workspace& ws,
         ActorConfig cfg, WorkerOptions opt = {})
      : bus_(bus),
        profile_(std::move(profile)),
        registry_(std::move(registry)),
        ws_(ws),
        cfg_(cfg),
        opt_(opt),
        rng_(opt.seed) {}

  const ActorId& id() const { return profile_.worker_id; }
  const WorkerProfile& profile() const { return profile_; }

  /// Joins the bus. Nodes with a device report negotiate and announce their
  /// execution model first.
  void start(Tick now) {
    bus_.register_actor(id());
    bus_.subscribe(id(), Channel::TasksToDo);
    bus_.subscribe(id(), Channel::Emergency);
    joined_at_ = now;
    if (profile_.em_probe) {
      em_ = em_negotiate(*profile_.em_probe);
      Json p = em_to_json(em_);
      p["worker_id"] = id();
      bus_.publish(id(), Channel::EM, "em", std::move(p));
    }
  }

  void step(Tick now) {
    if (halted_) return;
    for (const auto& env : bus_.drain(id())) {
      if (env.channel == Channel::Emergency) {
        halted_ = true;
        return;
      }
      if (env.kind == "task") on_task(env);
      else if (env.kind == "assignment") on_assignment(env.payload, now);
    }
    if (running_) {
      ++busy_ticks_;
      if (running_->started < now) advance(now);
    } else if (pending_ && now - pending_->since > cfg_.announce_period()) {
      open_.erase(pending_->task_id);
      pending_.reset();
    }
    if (!running_ && !pending_) volunteer(now);
  }

  bool halted() const { return halted_; }
  bool busy() const { return running_.has_value(); }
  Tick busy_ticks() const { return busy_ticks_; }
  Tick joined_at() const { return joined_at_; }
  const EMConfig& em() const { return em_; }
  const std::vector<std::string>& diagnostics() const { return diag_; }

 private:
  struct Open {
    int attempt = 1;
    Json task;  // serialized Task
    Tick eligible_at = 0;
    Seq order = 0;
  };
  struct Pending {
    TaskId task_id;
    int attempt = 1;
    Tick since = 0;
  };
  struct Running {
    TaskId task_id;
    int attempt = 1;
    KernelSpec kernel;
    double remaining = 0;
    Tick started = 0;
    Tick last_heartbeat = 0;
  };

  void on_task(const Envelope& env) {
    const auto& p = env.payload;
    if (!p.contains("task")) return;
    const auto tid = p["task_id"].get<std::string>();
    const int attempt = p["attempt"].get<int>();
    Task def;
    try {
      def = task_from_json(p["task"]);
    } catch (const Error& e) {
      diag_.push_back(e.what());
      return;
    }
    if (!satisfies(profile_, def.required_caps)) return;
    if (running_ && running_->task_id == tid && running_->attempt == attempt) return;
    auto it = open_.find(tid);
    if (it != open_.end() && it->second.attempt >= attempt) return;
    if (pending_ && pending_->task_id == tid) pending_.reset();
    Tick delay = opt_.volunteer_latency;
    if (opt_.volunteer_jitter > 0) delay += static_cast<Tick>(rng_() % static_cast<std::uint64_t>(opt_.volunteer_jitter + 1));
    open_[tid] = Open{attempt, p["task"], env.ts + delay, env.seq};
  }

  void on_assignment(const Json& p, Tick now) {
    const auto tid = p["task_id"].get<std::string>();
    const int attempt = p["attempt"].get<int>();
    if (p["worker_id"].get<std::string>() != id()) {
      auto it = open_.find(tid);
      if (it != open_.end() && it->second.attempt <= attempt) open_.erase(it);
      if (pending_ && pending_->task_id == tid) pending_.reset();
      return;
    }
    auto it = open_.find(tid);
    if (it == open_.end() || it->second.attempt != attempt) {
      diag_.push_back("UnknownAssignment: " + tid);
      return;
    }
    if (running_) {
      diag_.push_back("Busy: ignoring assignment of " + tid);
      return;
    }
    Task def = task_from_json(it->second.task);
    if (p.contains("em")) em_ = em_from_json(p["em"]);
    running_ = Running{tid, attempt, def.kernel, def.kernel.declared_duration, now, now};
    open_.erase(it);
    pending_.reset();
    bus_.publish(id(), Channel::TasksInProgress, "started",
                 Json{{"task_id", tid}, {"worker_id", id()}, {"attempt", attempt}});
  }

  void advance(Tick now) {
    running_->remaining -= profile_.speed;
    if (running_->remaining <= 1e-9) {
      finish();
    } else if (now - running_->last_heartbeat >= cfg_.heartbeat.H) {
      running_->last_heartbeat = now;
      bus_.publish(id(), Channel::TasksInProgress, "heartbeat",
                   Json{{"task_id", running_->task_id}, {"worker_id", id()}, {"attempt", running_->attempt}});
    }
  }

  void finish() {
    TaskResult r;
    try {
      r = execute_kernel(*registry_, running_->kernel, ws_, em_, profile_.speed);
    } catch (const MissingInput& e) {
      r.exit_status = 3;
      r.message = e.what();
    } catch (const UnknownKernel& e) {
      r.exit_status = 127;
      r.message = e.what();
    }
    if (!r.message.empty()) diag_.push_back(running_->task_id + ": " + r.message);
    bus_.publish(id(), Channel::TasksToCheck, "result",
                 Json{{"task_id", running_->task_id},
                      {"attempt", running_->attempt},
                      {"worker_id", id()},
                      {"outputs", outputs_to_json(r.outputs)},
                      {"exit_status", r.exit_status}});
    running_.reset();
  }

  // Offers itself for the oldest open task whose volunteer delay has passed.
  void volunteer(Tick now) {
    const std::pair<const TaskId, Open>* pick = nullptr;
    for (const auto& entry : open_)
      if (entry.second.eligible_at <= now && (!pick || entry.second.order < pick->second.order)) pick = &entry;
    if (!pick) return;
    bus_.publish(id(), Channel::VolunteerWorkers, "volunteer",
                 Json{{"worker_id", id()},
                      {"task_id", pick->first},
                      {"attempt", pick->second.attempt},
                      {"profile", profile_to_json(profile_)}});
    pending_ = Pending{pick->first, pick->second.attempt, now};
  }

  Transport& bus_;
  WorkerProfile profile_;
  std::shared_ptr<const KernelRegistry> registry_;
  Workspace& ws_;
  ActorConfig cfg_;
  WorkerOptions opt_;
  std::mt19937_64 rng_;
  EMConfig em_;
  std::map<TaskId, Open> open_;
  std::optional<Pending> pending_;
  std::optional<Running> running_;
  Tick busy_ticks_ = 0;
  Tick joined_at_ = 0;
  bool halted_ = false;
  std::vector<std::string> diag_;
};

}  // namespace pubflow
