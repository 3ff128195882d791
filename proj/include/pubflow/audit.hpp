#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pubflow/bus.hpp"
#include "pubflow/dag.hpp"

namespace pubflow {

/// Parses a JSON-lines message log. Sequence numbers must start at 1 and
/// grow by exactly one per line; anything else is a MalformedLog.
inline std::vector<Envelope> parse_log(std::string_view text) {
  std::vector<Envelope> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception&) {
      throw MalformedLog("line " + std::to_string(line_no) + ": not valid JSON");
    }
    Envelope e;
    try {
      e = envelope_from_json(j);
    } catch (const MalformedLog& err) {
      throw MalformedLog("line " + std::to_string(line_no) + ": " + err.what());
    }
    if (e.seq != out.size() + 1)
      throw MalformedLog("line " + std::to_string(line_no) + ": seq " + std::to_string(e.seq) + ", expected " +
                         std::to_string(out.size() + 1));
    out.push_back(std::move(e));
  }
  return out;
}

struct Violation {
  std::string rule;  // "precedence" or a lifecycle rule name
  TaskId task;
  std::string detail;
  Seq seq = 0;

  std::string describe() const { return rule + ": " + detail; }
};

namespace audit_detail {

struct Marks {
  std::map<TaskId, Seq> first_ok_verdict;
  std::map<TaskId, Seq> first_started;
};

inline Marks collect(const std::vector<Envelope>& log) {
  Marks m;
  for (const auto& e : log) {
    if (e.kind == "verdict" && e.payload.value("ok", false)) {
      m.first_ok_verdict.emplace(e.payload["task_id"].get<std::string>(), e.seq);
    } else if (e.kind == "started") {
      m.first_started.emplace(e.payload["task_id"].get<std::string>(), e.seq);
    }
  }
  return m;
}

inline std::vector<TaskId> children_of(const Marks& m, const TaskId& parent) {
  std::set<TaskId> out;
  const std::string prefix = parent + "/";
  for (const auto* mp : {&m.first_ok_verdict, &m.first_started})
    for (const auto& [id, _] : *mp)
      if (id.starts_with(prefix)) out.insert(id);
  return {out.begin(), out.end()};
}

// A task split at run time finishes with its last child and starts with its
// first one.
inline std::optional<Seq> done_seq(const Marks& m, const TaskId& id) {
  if (auto it = m.first_ok_verdict.find(id); it != m.first_ok_verdict.end()) return it->second;
  auto kids = children_of(m, id);
  if (kids.empty()) return std::nullopt;
  Seq last = 0;
  for (const auto& k : kids) {
    auto it = m.first_ok_verdict.find(k);
    if (it == m.first_ok_verdict.end()) return std::nullopt;
    last = std::max(last, it->second);
  }
  return last;
}

inline std::optional<Seq> start_seq(const Marks& m, const TaskId& id) {
  if (auto it = m.first_started.find(id); it != m.first_started.end()) return it->second;
  std::optional<Seq> first;
  for (const auto& k : children_of(m, id)) {
    auto it = m.first_started.find(k);
    if (it != m.first_started.end() && (!first || it->second < *first)) first = it->second;
  }
  return first;
}

}  // namespace audit_detail

/// Every edge u -> v of the batch must see u's first accepted verdict before
/// v's first start.
inline std::vector<Violation> precedence_audit(const std::vector<Envelope>& log, const WorkflowBatch& batch) {
  auto m = audit_detail::collect(log);
  std::vector<Violation> out;
  for (const auto& [v, task] : batch.tasks) {
    auto started = audit_detail::start_seq(m, v);
    if (!started) continue;
    for (const auto& u : task.deps) {
      auto done = audit_detail::done_seq(m, u);
      if (done && *done < *started) continue;
      std::string detail = u + " -> " + v + ": " + v + " started at seq " + std::to_string(*started) + " but " + u +
                           (done ? " was verified at seq " + std::to_string(*done) : std::string(" was never verified"));
      out.push_back(Violation{"precedence", v, std::move(detail), *started});
    }
  }
  return out;
}

/// Per-task lifecycle rules over the log: one assignment per attempt, start
/// only by the assignee, result only after a start, acceptance only after a
/// result and at most once, and a single closing Emergency.
inline std::vector<Violation> lifecycle_audit(const std::vector<Envelope>& log) {
  std::vector<Violation> out;
  using Key = std::pair<TaskId, int>;
  std::map<Key, ActorId> assigned;
  std::map<Key, ActorId> started;
  std::set<Key> resulted;
  std::set<TaskId> accepted;
  int emergencies = 0;
  auto flag = [&](const char* rule, const Envelope& e, const TaskId& id, std::string detail) {
    out.push_back(Violation{rule, id, id + ": " + detail + " (seq " + std::to_string(e.seq) + ")", e.seq});
  };
  for (const auto& e : log) {
    if (e.kind == "emergency") {
      if (++emergencies > 1) flag("single-emergency", e, "", "second Emergency");
      continue;
    }
    if (!e.payload.contains("task_id") || !e.payload.contains("attempt")) continue;
    const auto id = e.payload["task_id"].get<std::string>();
    const int attempt = e.payload["attempt"].get<int>();
    const Key key{id, attempt};
    if (e.kind == "assignment") {
      if (!assigned.emplace(key, e.payload["worker_id"].get<std::string>()).second)
        flag("single-assignment", e, id, "attempt " + std::to_string(attempt) + " assigned twice");
    } else if (e.kind == "started") {
      auto a = assigned.find(key);
      if (a == assigned.end() || a->second != e.sender)
        flag("start-by-assignee", e, id, e.sender + " started without an assignment");
      started[key] = e.sender;
    } else if (e.kind == "heartbeat") {
      if (!started.contains(key)) flag("heartbeat-after-start", e, id, "heartbeat before start");
    } else if (e.kind == "result") {
      if (!started.contains(key)) flag("result-after-start", e, id, "result without a start");
      resulted.insert(key);
    } else if (e.kind == "verdict" && e.payload.value("ok", false)) {
      if (!resulted.contains(key)) flag("verdict-after-result", e, id, "accepted without a result");
      if (!accepted.insert(id).second) flag("single-acceptance", e, id, "accepted twice");
    }
  }
  return out;
}

inline std::vector<Violation> audit_log(std::string_view text, const WorkflowBatch& batch) {
  auto log = parse_log(text);
  auto out = precedence_audit(log, batch);
  auto life = lifecycle_audit(log);
  out.insert(out.end(), life.begin(), life.end());
  return out;
}

}  // namespace pubflow
