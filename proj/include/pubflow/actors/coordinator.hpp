#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pubflow/actors/config.hpp"
#include "pubflow/dlc.hpp"
#include "pubflow/workflow_io.hpp"
#include "pubflow/workspace.hpp"

namespace pubflow {

struct CoordinatorState {
  WorkflowBatch batch;
  std::map<TaskId, TaskState> state_of;
  std::map<TaskId, std::vector<WorkerProfile>> volunteers;  // for the current attempt
  std::map<TaskId, ActorId> assignments;
  std::set<TaskId> released;
  std::set<TaskId> finished;
  std::map<TaskId, std::set<TaskId>> unfolded;  // parent -> exit ids
  bool emergency_sent = false;
};

/// Owns the task lifecycle: releases ready tasks, unfolds them when a rule's
/// guard holds, picks a worker among the volunteers and closes the batch with
/// a single Emergency once everything is verified.
class Coordinator {
 public:
  static constexpr const char* kDefaultId = "coordinator";

  Coordinator(Transport& bus, ActorConfig cfg, Workspace* ws = nullptr, ActorId id = kDefaultId)
      : bus_(bus), cfg_(cfg), ws_(ws), id_(std::move(id)) {
    bus_.register_actor(id_);
    for (Channel c : {Channel::WaitingTasks, Channel::TasksToDo, Channel::VolunteerWorkers, Channel::TasksInProgress,
                      Channel::TasksToCheck, Channel::FinishedTasks, Channel::DLC, Channel::EM})
      bus_.subscribe(id_, c);
  }

  const ActorId& id() const { return id_; }

  void step(Tick now) {
    if (state_.emergency_sent) return;
    for (const auto& env : bus_.drain(id_)) {
      handle(env, now);
      if (state_.emergency_sent) return;
    }
    release_ready(now);
    assign(now);
    expire_assignments(now);
    reannounce(now);
    maybe_complete();
  }

  const CoordinatorState& state() const { return state_; }
  const std::vector<std::string>& diagnostics() const { return diag_; }
  bool halted() const { return state_.emergency_sent; }
  const std::optional<std::string>& outcome() const { return outcome_; }
  const std::map<ActorId, EMConfig>& em_configs() const { return em_; }

  /// Sum over tasks of (highest attempt issued - 1).
  int re_executions() const {
    int n = 0;
    for (const auto& [_, s] : state_.state_of) n += s.attempt - 1;
    return n;
  }

 private:
  void handle(const Envelope& env, Tick now) {
    const Json& p = env.payload;
    switch (env.channel) {
      case Channel::WaitingTasks:
        if (env.kind == "task") on_waiting(p);
        break;
      case Channel::TasksToDo:
        if (env.kind == "task" && env.sender != id_) on_republished(p, env.ts);
        break;
      case Channel::VolunteerWorkers:
        if (env.kind == "volunteer") on_volunteer(p);
        break;
      case Channel::TasksInProgress:
        if (env.kind == "started") on_started(p);
        break;
      case Channel::TasksToCheck:
        if (env.kind == "result") on_result(p);
        break;
      case Channel::FinishedTasks:
        if (env.kind == "verdict") on_verdict(p);
        break;
      case Channel::DLC:
        if (env.kind == "dlc") on_dlc(p);
        break;
      case Channel::EM:
        if (env.kind == "em") em_[p["worker_id"].get<std::string>()] = em_from_json(p);
        break;
      default:
        break;
    }
    (void)now;
  }

  void on_waiting(const Json& p) {
    Task task;
    try {
      task = task_from_json(p.at("task"), ParseOptions{cfg_.max_attempts_default});
    } catch (const std::exception& e) {
      diag_.push_back(std::string("SchemaError: ") + e.what());
      return;
    }
    if (state_.state_of.contains(task.id) || state_.unfolded.contains(task.id)) {
      diag_.push_back("DuplicateTask: " + task.id);
      return;
    }
    batch_id_ = p.value("batch_id", batch_id_);
    expected_ = p.value("batch_size", expected_);
    state_.batch.batch_id = batch_id_;
    if (p.contains("rule")) {
      auto rule = rule_from_json(p["rule"], ParseOptions{cfg_.max_attempts_default});
      state_.batch.rules.emplace(rule.rule_id, std::move(rule));
    }
    std::set<TaskId> deps;
    for (const auto& d : task.deps) {
      auto u = state_.unfolded.find(d);
      if (u == state_.unfolded.end()) deps.insert(d);
      else deps.insert(u->second.begin(), u->second.end());
    }
    task.deps = std::move(deps);
    state_.state_of[task.id] = TaskState{TaskPhase::Waiting, 1};
    state_.batch.tasks.emplace(task.id, std::move(task));
    ++arrived_;
  }

  void on_republished(const Json& p, Tick ts) {
    const auto id = p["task_id"].get<std::string>();
    const int attempt = p["attempt"].get<int>();
    auto it = state_.state_of.find(id);
    if (it == state_.state_of.end() || state_.finished.contains(id)) return;
    if (attempt <= it->second.attempt) return;
    it->second = TaskState{TaskPhase::ToDo, attempt};
    reset_selection(id);
    announced_at_[id] = ts;
  }

  void on_volunteer(const Json& p) {
    WorkerProfile prof;
    try {
      prof = profile_from_json(p["profile"]);
    } catch (const Error& e) {
      diag_.push_back(std::string("SchemaError: ") + e.what());
      return;
    }
    workers_[prof.worker_id] = prof;
    const auto id = p["task_id"].get<std::string>();
    const int attempt = p["attempt"].get<int>();
    auto it = state_.state_of.find(id);
    if (it == state_.state_of.end()) {
      diag_.push_back("StaleVolunteer: unknown task " + id);
      return;
    }
    if (it->second.phase != TaskPhase::ToDo || it->second.attempt != attempt || state_.assignments.contains(id)) {
      diag_.push_back("StaleVolunteer: " + prof.worker_id + " for " + id + " attempt " + std::to_string(attempt));
      return;
    }
    auto& v = state_.volunteers[id];
    bool seen = false;
    for (const auto& w : v) seen = seen || w.worker_id == prof.worker_id;
    if (!seen) v.push_back(prof);
    selection_due_.insert(id);
  }

  void on_started(const Json& p) {
    const auto id = p["task_id"].get<std::string>();
    auto it = state_.state_of.find(id);
    if (it == state_.state_of.end()) return;
    auto a = state_.assignments.find(id);
    if (it->second.phase == TaskPhase::ToDo && it->second.attempt == p["attempt"].get<int>() &&
        a != state_.assignments.end() && a->second == p["worker_id"].get<std::string>()) {
      it->second.phase = TaskPhase::InProgress;
      assigned_at_.erase(id);
    }
  }

  void on_result(const Json& p) {
    const auto id = p["task_id"].get<std::string>();
    auto it = state_.state_of.find(id);
    if (it == state_.state_of.end()) return;
    if (it->second.phase == TaskPhase::InProgress && it->second.attempt == p["attempt"].get<int>())
      it->second.phase = TaskPhase::ToCheck;
  }

  void on_verdict(const Json& p) {
    const auto id = p["task_id"].get<std::string>();
    auto it = state_.state_of.find(id);
    if (it == state_.state_of.end()) {
      diag_.push_back("UnknownTask: verdict for " + id);
      return;
    }
    if (state_.finished.contains(id)) {
      diag_.push_back("DuplicateVerdict: " + id);
      return;
    }
    if (!p["ok"].get<bool>()) {
      publish_emergency("failed");
      return;
    }
    it->second = TaskState{TaskPhase::Finished, std::max(it->second.attempt, p["attempt"].get<int>())};
    state_.finished.insert(id);
    reset_selection(id);
  }

  // A lost worker may have left outputs of an unverified task behind; they
  // are no longer trusted and go back to acquiring.
  void on_dlc(const Json& p) {
    const auto id = p["task_id"].get<std::string>();
    DlcEvent event;
    try {
      event = parse_dlc_event(p["event"].get<std::string>());
    } catch (const Error& e) {
      diag_.push_back(e.what());
      return;
    }
    auto t = state_.batch.tasks.find(id);
    if (!ws_ || t == state_.batch.tasks.end() || state_.finished.contains(id)) return;
    for (const auto& out : t->second.kernel.outputs) {
      if (!ws_->ready(out)) continue;
      try {
        dlc_cycle(*ws_, out, event);
        diag_.push_back("dlc: " + out + " -> acquiring");
      } catch (const Error& e) {
        diag_.push_back(std::string("dlc: ") + e.what());
      }
    }
  }

  ResourceSnapshot snapshot(const Task& t) const {
    ResourceSnapshot s;
    for (const auto& [_, w] : workers_) {
      if (!w.alive) continue;
      ++s.available_workers;
      s.capabilities.insert(w.capabilities.begin(), w.capabilities.end());
    }
    auto ds = t.kernel.params.find("dataset_size");
    if (ds != t.kernel.params.end() && ds->is_number()) s.dataset_size = ds->get<double>();
    return s;
  }

  void release_ready(Tick now) {
    for (bool again = true; again;) {
      again = false;
      for (const auto& id : ready_tasks(state_.batch, state_.finished, state_.released)) {
        const Task& task = state_.batch.tasks.at(id);
        if (task.unfold_rule) {
          auto r = state_.batch.rules.find(*task.unfold_rule);
          if (r != state_.batch.rules.end() && r->second.head == task.kernel.name) {
            auto snap = snapshot(task);
            if (r->second.guard.holds(snap)) {
              expand(id, r->second, snap);
              again = true;
              break;
            }
            diag_.push_back("GuardFailed: " + id + " runs unsplit");
          }
        }
        state_.released.insert(id);
        state_.state_of[id] = TaskState{TaskPhase::ToDo, 1};
        announce(id, 1, now);
      }
    }
  }

  void expand(const TaskId& id, UnfoldRule rule, const ResourceSnapshot& snap) {
    state_.batch = unfold(state_.batch, id, rule, snap, state_.state_of.at(id).phase);
    std::set<TaskId> exits;
    for (const auto& e : rule.exit) exits.insert(child_id(id, e));
    state_.unfolded[id] = exits;
    state_.state_of.erase(id);
    for (const auto& [bid, _] : rule.body) state_.state_of[child_id(id, bid)] = TaskState{};
    expected_ += rule.body.size() - 1;
    arrived_ += rule.body.size() - 1;
  }

  void announce(const TaskId& id, int attempt, Tick now) {
    Json payload{{"task_id", id},
                 {"attempt", attempt},
                 {"batch_id", batch_id_},
                 {"task", task_to_json(state_.batch.tasks.at(id))}};
    bus_.publish(id_, Channel::TasksToDo, "task", std::move(payload));
    announced_at_[id] = now;
  }

  void assign(Tick now) {
    for (const auto& id : selection_due_) {
      const auto& st = state_.state_of.at(id);
      if (st.phase != TaskPhase::ToDo || state_.assignments.contains(id)) continue;
      const auto& vols = state_.volunteers[id];
      auto winner = select_worker(state_.batch.tasks.at(id), vols, cfg_.sla);
      if (!winner) {
        diag_.push_back("NoEligibleWorker: " + id);
        continue;
      }
      Json payload{{"task_id", id}, {"worker_id", *winner}, {"attempt", st.attempt}};
      if (auto e = em_.find(*winner); e != em_.end()) payload["em"] = em_to_json(e->second);
      bus_.publish(id_, Channel::TasksToDo, "assignment", std::move(payload));
      state_.assignments[id] = *winner;
      assigned_at_[id] = now;
    }
    selection_due_.clear();
  }

  // An assignment nobody starts (the worker vanished in between) is retried
  // as a new attempt.
  void expire_assignments(Tick now) {
    std::vector<TaskId> expired;
    for (const auto& [id, at] : assigned_at_)
      if (now - at > cfg_.timeout() && state_.state_of.at(id).phase == TaskPhase::ToDo) expired.push_back(id);
    for (const auto& id : expired) {
      auto& st = state_.state_of.at(id);
      diag_.push_back("AssignmentTimeout: " + id + " attempt " + std::to_string(st.attempt));
      st = TaskState{TaskPhase::ToDo, st.attempt + 1};
      reset_selection(id);
      announce(id, st.attempt, now);
    }
  }

  void reannounce(Tick now) {
    for (const auto& [id, st] : state_.state_of) {
      if (st.phase != TaskPhase::ToDo || state_.assignments.contains(id)) continue;
      auto a = announced_at_.find(id);
      if (a != announced_at_.end() && now - a->second >= cfg_.announce_period()) announce(id, st.attempt, now);
    }
  }

  void maybe_complete() {
    if (expected_ == 0 || arrived_ < expected_ || state_.finished.size() != state_.state_of.size()) return;
    publish_emergency("complete");
  }

  void publish_emergency(const std::string& reason) {
    bus_.publish(id_, Channel::Emergency, "emergency", Json{{"reason", reason}, {"batch_id", batch_id_}});
    state_.emergency_sent = true;
    outcome_ = reason;
  }

  void reset_selection(const TaskId& id) {
    state_.volunteers.erase(id);
    state_.assignments.erase(id);
    assigned_at_.erase(id);
    selection_due_.erase(id);
  }

  Transport& bus_;
  ActorConfig cfg_;
  Workspace* ws_;
  ActorId id_;
  CoordinatorState state_;
  std::string batch_id_;
  std::size_t expected_ = 0;
  std::size_t arrived_ = 0;
  std::map<TaskId, Tick> announced_at_;
  std::map<TaskId, Tick> assigned_at_;
  std::set<TaskId> selection_due_;
  std::map<ActorId, WorkerProfile> workers_;
  std::map<ActorId, EMConfig> em_;
  std::vector<std::string> diag_;
  std::optional<std::string> outcome_;
};

}  // namespace pubflow
