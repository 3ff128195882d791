#pragma once

#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "pubflow/actors/config.hpp"
#include "pubflow/kernels.hpp"
#include "pubflow/workflow_io.hpp"

namespace pubflow {

/// Decides whether a reported result is acceptable. `ws` may be null when the
/// checker has no access to the data store.
using Validator = std::function<bool(const Json& result, const Task& task, const Workspace* ws)>;

class ValidatorRegistry {
 public:
  ValidatorRegistry() {
    // Exit 0, every declared output reported, and each reported checksum
    // matching the stored dataset.
    add("default", [](const Json& result, const Task& task, const Workspace* ws) {
      if (result["exit_status"].get<int>() != 0) return false;
      std::map<std::string, Checksum> reported;
      for (const auto& o : outputs_from_json(result["outputs"])) reported[o.dataset_id] = o.checksum;
      for (const auto& out : task.kernel.outputs) {
        auto it = reported.find(out);
        if (it == reported.end()) return false;
        if (ws) {
          auto rec = ws->record(out);
          if (!rec.checksum || *rec.checksum != it->second) return false;
        }
      }
      return true;
    });
    add("exit_status", [](const Json& result, const Task&, const Workspace*) {
      return result["exit_status"].get<int>() == 0;
    });
  }

  void add(std::string name, Validator v) { validators_[std::move(name)] = std::move(v); }
  const Validator* find(const std::string& name) const {
    auto it = validators_.find(name);
    return it == validators_.end() ? nullptr : &it->second;
  }

 private:
  std::map<std::string, Validator> validators_;
};

/// Verifies results. The first acceptable result of a task wins; failures
/// are retried as new attempts until the task's max_attempts is spent.
class Checker {
 public:
  static constexpr const char* kDefaultId = "checker";

  Checker(Transport& bus, std::shared_ptr<const ValidatorRegistry> validators, const Workspace* ws,
          ActorConfig cfg = {}, ActorId id = kDefaultId)
      : bus_(bus), validators_(std::move(validators)), ws_(ws), cfg_(cfg), id_(std::move(id)) {
    bus_.register_actor(id_);
    bus_.subscribe(id_, Channel::TasksToDo);
    bus_.subscribe(id_, Channel::TasksToCheck);
    bus_.subscribe(id_, Channel::Emergency);
  }

  const ActorId& id() const { return id_; }

  void step(Tick) {
    if (halted_) return;
    for (const auto& env : bus_.drain(id_)) {
      if (env.channel == Channel::Emergency) {
        halted_ = true;
        return;
      }
      if (env.kind == "task") on_task(env.payload);
      else if (env.kind == "result") on_result(env.payload);
    }
  }

  bool halted() const { return halted_; }
  const std::vector<std::string>& diagnostics() const { return diag_; }
  int failures(const TaskId& id) const {
    auto it = failures_.find(id);
    return it == failures_.end() ? 0 : it->second;
  }

 private:
  void on_task(const Json& p) {
    const auto id = p["task_id"].get<std::string>();
    if (p.contains("task")) {
      try {
        defs_[id] = task_from_json(p["task"], ParseOptions{cfg_.max_attempts_default});
      } catch (const Error& e) {
        diag_.push_back(e.what());
      }
    }
    latest_[id] = std::max(latest_[id], p["attempt"].get<int>());
  }

  void on_result(const Json& p) {
    const auto id = p["task_id"].get<std::string>();
    const int attempt = p["attempt"].get<int>();
    if (done_.contains(id)) {
      diag_.push_back("DuplicateResult: " + id + " attempt " + std::to_string(attempt) + " discarded");
      return;
    }
    auto d = defs_.find(id);
    Task task;
    if (d != defs_.end()) task = d->second;
    else task.id = id;
    const std::string name = task.validator.value_or("default");
    bool ok = false;
    if (const Validator* v = validators_->find(name)) {
      try {
        ok = (*v)(p, task, ws_);
      } catch (const std::exception& e) {
        diag_.push_back("validator '" + name + "' threw: " + e.what());
      }
    } else {
      diag_.push_back("UnknownValidator: " + name);
    }

    if (ok) {
      done_.insert(id);
      bus_.publish(id_, Channel::FinishedTasks, "verdict",
                   Json{{"task_id", id}, {"attempt", attempt}, {"ok", true}, {"outputs", p["outputs"]}});
      return;
    }
    if (attempt < latest_[id]) {
      diag_.push_back("StaleResult: " + id + " attempt " + std::to_string(attempt) + " superseded");
      return;
    }
    const int spent = ++failures_[id];
    if (spent < task.max_attempts) {
      latest_[id] = attempt + 1;
      Json payload{{"task_id", id}, {"attempt", attempt + 1}, {"reason", "check_failed"}};
      if (d != defs_.end()) payload["task"] = task_to_json(task);
      bus_.publish(id_, Channel::TasksToDo, "task", std::move(payload));
    } else {
      done_.insert(id);
      bus_.publish(id_, Channel::FinishedTasks, "verdict", Json{{"task_id", id}, {"attempt", attempt}, {"ok", false}});
    }
  }

  Transport& bus_;
  std::shared_ptr<const ValidatorRegistry> validators_;
  const Workspace* ws_;
  ActorConfig cfg_;
  ActorId id_;
  std::map<TaskId, Task> defs_;
  std::map<TaskId, int> latest_;
  std::map<TaskId, int> failures_;
  std::set<TaskId> done_;
  std::vector<std::string> diag_;
  bool halted_ = false;
};

}  // namespace pubflow
