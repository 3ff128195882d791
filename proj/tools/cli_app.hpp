#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pubflow/pubflow.hpp"

namespace pubflow::cli {

enum Exit { kOk = 0, kDomainFailure = 1, kUsage = 2 };

/// Bad or unreadable input; always exits 2.
struct BadInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BadInput("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw BadInput("cannot write '" + path + "'");
  out << bytes;
}

inline WorkflowFormat format_for(const std::string& path, const std::string& flag) {
  if (flag == "xml") return WorkflowFormat::Xml;
  if (flag == "json") return WorkflowFormat::Json;
  return std::filesystem::path(path).extension() == ".xml" ? WorkflowFormat::Xml : WorkflowFormat::Json;
}

inline Json parse_json_file(const std::string& path) {
  auto text = read_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw BadInput("'" + path + "' is not valid JSON: " + e.what());
  }
}

struct Options {
  bool json = false;
  std::string config;
  std::string workflow, format, scenario, log, output, edges = "stencil";
  std::optional<std::uint64_t> seed;
  int partitions = 0, iterations = 0, cells = 0;
};

inline ActorConfig load_config(const Options& o) {
  if (o.config.empty()) return {};
  try {
    return config_from_json(parse_json_file(o.config));
  } catch (const SchemaError& e) {
    throw BadInput(e.what());
  }
}

inline WorkflowBatch load_workflow(const Options& o, const ActorConfig& cfg) {
  auto text = read_file(o.workflow);
  return parse_workflow(text, format_for(o.workflow, o.format), ParseOptions{cfg.max_attempts_default});
}

inline int cmd_validate(const Options& o, std::ostream& out) {
  const auto cfg = load_config(o);
  const auto text = read_file(o.workflow);
  WorkflowBatch batch;
  try {
    batch = parse_workflow(text, format_for(o.workflow, o.format), ParseOptions{cfg.max_attempts_default});
  } catch (const Error& e) {
    if (o.json) out << Json{{"valid", false}, {"error", e.what()}}.dump() << '\n';
    else out << "invalid: " << e.what() << '\n';
    return kDomainFailure;
  }
  const auto r = validate_structure(batch);
  const bool valid = is_admissible(batch, r);
  if (o.json) {
    out << Json{{"tasks", batch.tasks.size()},
                {"edges", batch.edge_count()},
                {"series_parallel", r.series_parallel},
                {"general_dag", batch.general_dag()},
                {"cycle", r.cycle},
                {"valid", valid}}
               .dump()
        << '\n';
  } else {
    out << batch.tasks.size() << " tasks, " << batch.edge_count()
        << " edges, series-parallel: " << (r.series_parallel ? "yes" : "no") << '\n';
    if (!r.cycle.empty()) {
      out << "cycle: ";
      for (const auto& id : r.cycle) out << id << " -> ";
      out << r.cycle.front() << '\n';
    } else if (!valid) {
      out << "not series-parallel and not flagged general_dag\n";
    }
  }
  return valid ? kOk : kDomainFailure;
}

inline int cmd_simulate(const Options& o, std::ostream& out) {
  const auto cfg = load_config(o);
  WorkflowBatch batch;
  Scenario scenario;
  try {
    batch = load_workflow(o, cfg);
    scenario = scenario_from_json(parse_json_file(o.scenario));
  } catch (const Error& e) {
    throw BadInput(e.what());
  }
  if (o.seed) scenario.seed = *o.seed;

  SimOptions so;
  so.config = cfg;
  so.kernels = std::make_shared<KernelRegistry>(adapt::default_registry());
  SimResult res;
  try {
    res = run_simulation(batch, scenario, so);
  } catch (const ValidationError& e) {
    throw BadInput(e.what());
  }
  write_file(o.log, res.log);
  out << report_to_json(res.report).dump(o.json ? -1 : 2) << '\n';
  return res.report.completed ? kOk : kDomainFailure;
}

// Largest stable step is halved so any admissible mesh gets a valid file.
inline adapt::SimParams generator_params(int M) {
  adapt::SimParams p;
  if (M >= 1) {
    const double h = adapt::cell_width(M);
    const double limit = 1.0 / (p.a / h + 2.0 * p.nu / (h * h));
    p.dt = std::min(p.dt, 0.5 * limit);
  }
  return p;
}

inline int cmd_generate(const Options& o, std::ostream& out) {
  adapt::AdaptOptions ao;
  if (o.edges == "barrier") ao.edges = adapt::EdgeMode::Barrier;
  else if (o.edges != "stencil") throw BadInput("--edges must be stencil or barrier");
  WorkflowBatch batch;
  try {
    batch = adapt::generate_adapt_workflow(o.partitions, o.iterations, o.cells, generator_params(o.cells), ao);
  } catch (const Error& e) {
    throw BadInput(e.what());
  }
  write_file(o.output, serialize_workflow(batch));
  if (o.json) out << Json{{"tasks", batch.tasks.size()}, {"edges", batch.edge_count()}, {"file", o.output}}.dump() << '\n';
  else out << batch.tasks.size() << " tasks written to " << o.output << '\n';
  return kOk;
}

inline int cmd_audit(const Options& o, std::ostream& out) {
  const auto cfg = load_config(o);
  const auto text = read_file(o.log);
  WorkflowBatch batch;
  try {
    batch = load_workflow(o, cfg);
  } catch (const Error& e) {
    throw BadInput(e.what());
  }
  std::vector<Violation> found;
  try {
    found = audit_log(text, batch);
  } catch (const MalformedLog& e) {
    throw BadInput(std::string("malformed log: ") + e.what());
  }
  if (o.json) {
    Json v = Json::array();
    for (const auto& f : found) v.push_back(Json{{"rule", f.rule}, {"task", f.task}, {"seq", f.seq}, {"detail", f.detail}});
    out << Json{{"violations", found.size()}, {"findings", v}}.dump() << '\n';
  } else {
    out << found.size() << " violations\n";
    for (const auto& f : found) out << "  " << f.describe() << '\n';
  }
  return found.empty() ? kOk : kDomainFailure;
}

/// Summary of a log on its own: traffic, verified tasks, retries, outcome.
inline Json summarize_log(const std::vector<Envelope>& log) {
  std::map<std::string, std::uint64_t> by_channel, by_kind;
  std::map<TaskId, int> top_attempt;
  std::set<TaskId> verified;
  std::string outcome = "incomplete";
  Tick makespan = 0;
  for (const auto& e : log) {
    ++by_channel[std::string(channel_name(e.channel))];
    ++by_kind[e.kind];
    makespan = std::max(makespan, e.ts);
    if (e.kind == "task") {
      auto id = e.payload["task_id"].get<std::string>();
      top_attempt[id] = std::max(top_attempt[id], e.payload["attempt"].get<int>());
    } else if (e.kind == "verdict" && e.payload["ok"].get<bool>()) {
      verified.insert(e.payload["task_id"].get<std::string>());
    } else if (e.kind == "emergency") {
      outcome = e.payload["reason"].get<std::string>();
    }
  }
  int re = 0;
  for (const auto& [_, a] : top_attempt) re += a - 1;
  return Json{{"messages_total", log.size()}, {"messages_by_channel", by_channel},
              {"messages_by_kind", by_kind},  {"tasks_seen", top_attempt.size()},
              {"tasks_verified", verified.size()}, {"re_executions", re},
              {"outcome", outcome},           {"makespan", makespan}};
}

inline int cmd_report(const Options& o, std::ostream& out) {
  const auto text = read_file(o.log);
  std::vector<Envelope> log;
  try {
    log = parse_log(text);
  } catch (const MalformedLog& e) {
    throw BadInput(std::string("malformed log: ") + e.what());
  }
  const Json s = summarize_log(log);
  if (o.json) {
    out << s.dump() << '\n';
    return kOk;
  }
  out << "messages: " << s["messages_total"].get<std::uint64_t>() << '\n';
  for (const auto& [c, n] : s["messages_by_channel"].items()) out << "  " << c << ": " << n.get<std::uint64_t>() << '\n';
  out << "tasks verified: " << s["tasks_verified"].get<std::size_t>() << " of " << s["tasks_seen"].get<std::size_t>()
      << '\n'
      << "re-executions: " << s["re_executions"].get<int>() << '\n'
      << "outcome: " << s["outcome"].get<std::string>() << " at tick " << s["makespan"].get<Tick>() << '\n';
  return kOk;
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"pubflow: publish-subscribe workflow engine"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("--json", o.json, "Machine-readable output");
  app.add_option("--config", o.config, "Actor configuration file (JSON)");

  auto* validate = app.add_subcommand("validate", "Check a workflow file");
  validate->add_option("--workflow", o.workflow, "Workflow file")->required();
  validate->add_option("--format", o.format, "xml or json")->check(CLI::IsMember({"xml", "json"}));

  auto* simulate = app.add_subcommand("simulate", "Run a workflow against a worker scenario");
  simulate->add_option("--workflow", o.workflow)->required();
  simulate->add_option("--scenario", o.scenario)->required();
  simulate->add_option("--log", o.log, "Where to write the event log")->required();
  simulate->add_option("--seed", o.seed, "Override the scenario seed");
  simulate->add_option("--format", o.format)->check(CLI::IsMember({"xml", "json"}));

  auto* generate = app.add_subcommand("generate-adapt", "Write the ADAPT demo workflow");
  generate->add_option("--partitions", o.partitions)->required();
  generate->add_option("--iterations", o.iterations)->required();
  generate->add_option("--cells", o.cells)->required();
  generate->add_option("--edges", o.edges, "stencil or barrier");
  generate->add_option("-o,--output", o.output)->required();

  auto* audit = app.add_subcommand("audit", "Check a log for precedence and lifecycle violations");
  audit->add_option("--log", o.log)->required();
  audit->add_option("--workflow", o.workflow)->required();
  audit->add_option("--format", o.format)->check(CLI::IsMember({"xml", "json"}));

  auto* report = app.add_subcommand("report", "Summarize a log");
  report->add_option("--log", o.log)->required();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (validate->parsed()) return cmd_validate(o, out);
    if (simulate->parsed()) return cmd_simulate(o, out);
    if (generate->parsed()) return cmd_generate(o, out);
    if (audit->parsed()) return cmd_audit(o, out);
    if (report->parsed()) return cmd_report(o, out);
  } catch (const BadInput& e) {
    if (o.json) out << Json{{"error", e.what()}}.dump() << '\n';
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    if (o.json) out << Json{{"error", e.what()}}.dump() << '\n';
    err << "error: " << e.what() << '\n';
    return kDomainFailure;
  }
  return kUsage;
}

}  // namespace pubflow::cli
