#pragma once

#include <map>
#include <string>
#include <vector>

#include "pubflow/actors/config.hpp"
#include "pubflow/workflow_io.hpp"

namespace pubflow {

/// Entry point for a batch: validates it, publishes every task on
/// WaitingTasks and collects the verified results.
class Broker {
 public:
  static constexpr const char* kDefaultId = "broker";

  explicit Broker(Transport& bus, ActorId id = kDefaultId) : bus_(bus), id_(std::move(id)) {
    bus_.register_actor(id_);
    bus_.subscribe(id_, Channel::FinishedTasks);
    bus_.subscribe(id_, Channel::DLC);
    bus_.subscribe(id_, Channel::Emergency);
  }

  const ActorId& id() const { return id_; }

  /// Throws ValidationError, publishing nothing, for cyclic batches and for
  /// non-series-parallel batches that are not flagged general_dag.
  std::vector<Seq> submit(const WorkflowBatch& batch) {
    auto report = validate_structure(batch);
    if (!report.dangling.empty()) throw ValidationError("dangling dependency " + report.dangling.front());
    if (!report.cycle.empty()) {
      std::string w;
      for (const auto& id : report.cycle) w += id + " -> ";
      throw ValidationError("cycle: " + w + report.cycle.front());
    }
    if (!is_admissible(batch, report))
      throw ValidationError("batch '" + batch.batch_id + "' is not series-parallel and not flagged general_dag");

    std::vector<Seq> seqs;
    for (const auto& [id, task] : batch.tasks) {
      Json payload{{"task_id", id},
                   {"attempt", 1},
                   {"batch_id", batch.batch_id},
                   {"batch_size", batch.tasks.size()},
                   {"task", task_to_json(task)}};
      if (task.unfold_rule) {
        auto r = batch.rules.find(*task.unfold_rule);
        if (r != batch.rules.end()) payload["rule"] = rule_to_json(r->second);
      }
      seqs.push_back(bus_.publish(id_, Channel::WaitingTasks, "task", std::move(payload)));
    }
    batch_id_ = batch.batch_id;
    return seqs;
  }

  void step(Tick) {
    if (halted_) return;
    for (const auto& env : bus_.drain(id_)) {
      if (env.channel == Channel::FinishedTasks && env.kind == "verdict") {
        const auto& p = env.payload;
        if (p["ok"].get<bool>() && !results_.contains(p["task_id"].get<std::string>()))
          results_[p["task_id"].get<std::string>()] = p.value("outputs", Json::array());
      } else if (env.channel == Channel::DLC) {
        diag_.push_back("dlc notification for " + env.payload["task_id"].get<std::string>());
      } else if (env.channel == Channel::Emergency) {
        reason_ = env.payload["reason"].get<std::string>();
        halted_ = true;
        return;
      }
    }
  }

  bool halted() const { return halted_; }
  const std::string& reason() const { return reason_; }
  const std::map<TaskId, Json>& results() const { return results_; }
  const std::vector<std::string>& diagnostics() const { return diag_; }

 private:
  Transport& bus_;
  ActorId id_;
  std::string batch_id_;
  std::map<TaskId, Json> results_;
  std::vector<std::string> diag_;
  std::string reason_;
  bool halted_ = false;
};

}  // namespace pubflow
