#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pubflow/errors.hpp"

namespace pubflow {

using Json = nlohmann::json;
using TaskId = std::string;

/// A named, registered action plus everything needed to run it.
struct KernelSpec {
  std::string name;
  Json params = Json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  double declared_duration = 1.0;  // work units at nominal speed

  bool operator==(const KernelSpec&) const = default;
};

struct Task {
  TaskId id;
  KernelSpec kernel;
  std::set<TaskId> deps;
  std::set<std::string> required_caps;
  std::optional<std::string> unfold_rule;
  std::optional<std::string> validator;
  int max_attempts = 3;
  Json extra = Json::object();  // unrecognised fields, kept for round-trips

  bool operator==(const Task&) const = default;
};

enum class TaskPhase : int { Waiting = 0, ToDo = 1, InProgress = 2, ToCheck = 3, Finished = 4 };

inline const char* to_string(TaskPhase p) {
  switch (p) {
    case TaskPhase::Waiting: return "Waiting";
    case TaskPhase::ToDo: return "ToDo";
    case TaskPhase::InProgress: return "InProgress";
    case TaskPhase::ToCheck: return "ToCheck";
    case TaskPhase::Finished: return "Finished";
  }
  return "?";
}

struct TaskState {
  TaskPhase phase = TaskPhase::Waiting;
  int attempt = 1;

  bool operator==(const TaskState&) const = default;
};

// Within one attempt the phase never goes backwards. A new attempt may only
// start from InProgress (monitor timeout) or ToCheck (failed check), or from
// ToDo when an assignment was never started, and always re-enters ToDo.
inline bool is_legal_transition(TaskState from, TaskState to) {
  if (to.attempt == from.attempt) return static_cast<int>(to.phase) >= static_cast<int>(from.phase);
  if (to.attempt < from.attempt) return false;
  return from.phase != TaskPhase::Finished && from.phase != TaskPhase::Waiting &&
         (to.phase == TaskPhase::ToDo || to.phase == TaskPhase::Finished);
}

/// What the coordinator knows about available resources when deciding
/// whether a node is worth unfolding.
struct ResourceSnapshot {
  int available_workers = 0;
  std::set<std::string> capabilities;
  double dataset_size = 0.0;
};

struct UnfoldGuard {
  int min_workers = 0;
  std::optional<std::string> capability;
  std::optional<double> min_dataset_size;

  bool holds(const ResourceSnapshot& snap) const {
    if (snap.available_workers < min_workers) return false;
    if (capability && !snap.capabilities.contains(*capability)) return false;
    if (min_dataset_size && snap.dataset_size < *min_dataset_size) return false;
    return true;
  }

  bool operator==(const UnfoldGuard&) const = default;
};

/// Production rule `head -> body`: a node running kernel `head` may be
/// replaced by the sub-batch `body` when the guard holds.
struct UnfoldRule {
  std::string rule_id;
  std::string head;
  UnfoldGuard guard;
  std::map<TaskId, Task> body;
  std::set<TaskId> entry;
  std::set<TaskId> exit;

  bool operator==(const UnfoldRule&) const = default;
};

struct WorkflowBatch {
  std::string batch_id;
  std::map<TaskId, Task> tasks;
  std::map<std::string, UnfoldRule> rules;
  Json metadata = Json::object();

  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& [id, t] : tasks) n += t.deps.size();
    return n;
  }

  bool general_dag() const {
    auto it = metadata.find("general_dag");
    return it != metadata.end() && it->is_boolean() && it->get<bool>();
  }

  bool operator==(const WorkflowBatch&) const = default;
};

// ---------------------------------------------------------------------------
// Graph helpers

namespace detail {

inline std::map<TaskId, std::vector<TaskId>> successors(const std::map<TaskId, Task>& tasks) {
  std::map<TaskId, std::vector<TaskId>> succ;
  for (const auto& [id, t] : tasks) {
    succ[id];
    for (const auto& d : t.deps)
      if (tasks.contains(d)) succ[d].push_back(id);
  }
  return succ;
}

}  // namespace detail

/// Returns a cycle as an ordered id list where each element precedes the next
/// and the last precedes the first; empty when the graph is acyclic.
inline std::vector<TaskId> find_cycle(const std::map<TaskId, Task>& tasks) {
  const auto succ = detail::successors(tasks);
  enum class Mark { White, Grey, Black };
  std::map<TaskId, Mark> mark;
  for (const auto& [id, _] : tasks) mark[id] = Mark::White;

  for (const auto& [root, _] : tasks) {
    if (mark[root] != Mark::White) continue;
    // iterative DFS keeping the grey path explicitly
    std::vector<std::pair<TaskId, std::size_t>> stack{{root, 0}};
    mark[root] = Mark::Grey;
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      const auto& out = succ.at(node);
      if (next == out.size()) {
        mark[node] = Mark::Black;
        stack.pop_back();
        continue;
      }
      const TaskId child = out[next++];
      if (mark[child] == Mark::Grey) {
        std::vector<TaskId> cycle;
        auto it = std::find_if(stack.begin(), stack.end(),
                               [&](const auto& e) { return e.first == child; });
        for (; it != stack.end(); ++it) cycle.push_back(it->first);
        return cycle;
      }
      if (mark[child] == Mark::White) {
        mark[child] = Mark::Grey;
        stack.emplace_back(child, 0);
      }
    }
  }
  return {};
}

/// Kahn's algorithm with lexicographic tie-breaking. Throws ValidationError on
/// a cycle.
inline std::vector<TaskId> topological_order(const std::map<TaskId, Task>& tasks) {
  std::map<TaskId, std::size_t> indeg;
  for (const auto& [id, t] : tasks) {
    indeg[id];
    for (const auto& d : t.deps)
      if (tasks.contains(d)) ++indeg[id];
  }
  const auto succ = detail::successors(tasks);
  std::set<TaskId> frontier;
  for (const auto& [id, n] : indeg)
    if (n == 0) frontier.insert(id);
  std::vector<TaskId> order;
  while (!frontier.empty()) {
    TaskId id = *frontier.begin();
    frontier.erase(frontier.begin());
    order.push_back(id);
    for (const auto& s : succ.at(id))
      if (--indeg[s] == 0) frontier.insert(s);
  }
  if (order.size() != tasks.size()) throw ValidationError("dependency graph contains a cycle");
  return order;
}

// ---------------------------------------------------------------------------
// Series-parallel recognition

/// Decides whether the two-terminal closure of the DAG (virtual source feeding
/// every root, every leaf feeding a virtual sink) reduces to a single edge
/// under repeated series and parallel reductions. Assumes acyclicity.
inline bool is_series_parallel(const std::map<TaskId, Task>& tasks) {
  if (tasks.empty()) return true;
  std::map<TaskId, int> index;
  int next = 2;
  for (const auto& [id, _] : tasks) index[id] = next++;
  constexpr int source = 0, sink = 1;

  // multigraph: out[u][v] = multiplicity, in mirrors it
  std::vector<std::map<int, int>> out(next), in(next);
  auto add = [&](int u, int v, int k = 1) {
    out[u][v] += k;
    in[v][u] += k;
  };
  auto remove = [&](int u, int v) {
    out[u].erase(v);
    in[v].erase(u);
  };
  const auto succ = detail::successors(tasks);
  for (const auto& [id, t] : tasks) {
    int v = index[id];
    bool has_dep = false;
    for (const auto& d : t.deps)
      if (tasks.contains(d)) {
        add(index[d], v);
        has_dep = true;
      }
    if (!has_dep) add(source, v);
    if (succ.at(id).empty()) add(v, sink);
  }

  auto degree = [](const std::map<int, int>& m) {
    int n = 0;
    for (const auto& [_, k] : m) n += k;
    return n;
  };

  bool changed = true;
  while (changed) {
    changed = false;
    for (int u = 0; u < next; ++u)
      for (auto& [v, k] : out[u])
        if (k > 1) {
          k = 1;
          in[v][u] = 1;
          changed = true;
        }
    for (int v = 2; v < next; ++v) {
      if (degree(in[v]) != 1 || degree(out[v]) != 1) continue;
      int u = in[v].begin()->first;
      int w = out[v].begin()->first;
      remove(u, v);
      remove(v, w);
      add(u, w);
      changed = true;
    }
  }
  for (int v = 2; v < next; ++v)
    if (!in[v].empty() || !out[v].empty()) return false;
  return out[source].size() == 1 && out[source].begin()->first == sink;
}

// ---------------------------------------------------------------------------
// Structural validation

struct ValidationReport {
  bool ok = true;
  std::vector<TaskId> cycle;
  bool series_parallel = false;
  std::vector<std::string> dangling;  // "task -> missing dep"
};

inline ValidationReport validate_structure(const WorkflowBatch& batch) {
  ValidationReport r;
  for (const auto& [id, t] : batch.tasks)
    for (const auto& d : t.deps)
      if (!batch.tasks.contains(d)) r.dangling.push_back(id + " -> " + d);
  r.cycle = find_cycle(batch.tasks);
  r.ok = r.cycle.empty() && r.dangling.empty();
  r.series_parallel = r.ok && is_series_parallel(batch.tasks);
  return r;
}

/// Acyclic, and either series-parallel or explicitly flagged as a general DAG.
inline bool is_admissible(const WorkflowBatch& batch, const ValidationReport& r) {
  return r.ok && (r.series_parallel || batch.general_dag());
}

inline void validate_rule(const UnfoldRule& rule) {
  auto fail = [&](const std::string& what) {
    throw SchemaError("rule '" + rule.rule_id + "': " + what);
  };
  if (rule.body.empty()) fail("empty body");
  if (rule.entry.empty()) fail("empty entry set");
  if (rule.exit.empty()) fail("empty exit set");
  for (const auto& e : rule.entry)
    if (!rule.body.contains(e)) fail("entry '" + e + "' not in body");
  for (const auto& e : rule.exit)
    if (!rule.body.contains(e)) fail("exit '" + e + "' not in body");
  for (const auto& [id, t] : rule.body)
    for (const auto& d : t.deps)
      if (!rule.body.contains(d)) fail("body task '" + id + "' depends on '" + d + "' outside the body");
  if (!find_cycle(rule.body).empty()) fail("body is cyclic");
}

// ---------------------------------------------------------------------------
// Scheduling primitives

/// Tasks whose every dependency is finished, excluding finished and already
/// released tasks, in lexicographic order.
inline std::vector<TaskId> ready_tasks(const WorkflowBatch& batch, const std::set<TaskId>& finished,
                                       const std::set<TaskId>& released = {}) {
  for (const auto& f : finished)
    if (!batch.tasks.contains(f)) throw UnknownId("finished set names unknown task '" + f + "'");
  std::vector<TaskId> out;
  for (const auto& [id, t] : batch.tasks) {
    if (finished.contains(id) || released.contains(id)) continue;
    if (std::all_of(t.deps.begin(), t.deps.end(), [&](const TaskId& d) { return finished.contains(d); }))
      out.push_back(id);
  }
  return out;
}

inline std::string child_id(const TaskId& parent, const TaskId& child) { return parent + "/" + child; }

/// Splices `rule.body` in place of `task_id`. Incoming edges fan out to every
/// entry node, outgoing edges fan in from every exit node, and body ids are
/// namespaced under the parent. The input batch is untouched.
inline WorkflowBatch unfold(const WorkflowBatch& batch, const TaskId& task_id, const UnfoldRule& rule,
                            const ResourceSnapshot& snapshot, TaskPhase phase = TaskPhase::Waiting) {
  auto it = batch.tasks.find(task_id);
  if (it == batch.tasks.end()) throw UnknownId("no task '" + task_id + "'");
  const Task& parent = it->second;
  if (rule.head != parent.kernel.name)
    throw HeadMismatch("rule '" + rule.rule_id + "' applies to '" + rule.head + "', task '" + task_id +
                       "' runs '" + parent.kernel.name + "'");
  if (phase != TaskPhase::Waiting && phase != TaskPhase::ToDo)
    throw StateError("task '" + task_id + "' is " + to_string(phase) + ", cannot unfold");
  if (!rule.guard.holds(snapshot)) throw GuardFailed("guard of rule '" + rule.rule_id + "' is false");

  WorkflowBatch out = batch;
  out.tasks.erase(task_id);

  std::set<TaskId> exits;
  for (const auto& e : rule.exit) exits.insert(child_id(task_id, e));

  for (auto& [id, t] : out.tasks) {
    if (t.deps.erase(task_id)) t.deps.insert(exits.begin(), exits.end());
  }
  for (const auto& [bid, body_task] : rule.body) {
    Task child = body_task;
    child.id = child_id(task_id, bid);
    child.deps.clear();
    for (const auto& d : body_task.deps) child.deps.insert(child_id(task_id, d));
    if (rule.entry.contains(bid)) child.deps.insert(parent.deps.begin(), parent.deps.end());
    child.unfold_rule.reset();
    if (out.tasks.contains(child.id)) throw SchemaError("unfolded id '" + child.id + "' collides");
    out.tasks.emplace(child.id, std::move(child));
  }
  return out;
}

/// Pairs (u, v) such that u must precede v, over the transitive closure.
inline std::set<std::pair<TaskId, TaskId>> precedence_closure(const std::map<TaskId, Task>& tasks) {
  std::set<std::pair<TaskId, TaskId>> closure;
  std::map<TaskId, std::set<TaskId>> ancestors;
  for (const auto& id : topological_order(tasks)) {
    auto& anc = ancestors[id];
    for (const auto& d : tasks.at(id).deps) {
      anc.insert(d);
      const auto& da = ancestors[d];
      anc.insert(da.begin(), da.end());
    }
    for (const auto& a : anc) closure.emplace(a, id);
  }
  return closure;
}

}  // namespace pubflow
