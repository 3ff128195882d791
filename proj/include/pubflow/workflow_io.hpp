#pragma once

// Workflow files: canonical JSON ("pubflow/1") and an XML mirror of the same
// schema. Both parsers are total: they either return a complete batch or
// throw SyntaxError / SchemaError naming the offending element.

#include <sstream>
#include <string>
#include <string_view>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "pubflow/dag.hpp"

namespace pubflow {

inline constexpr std::string_view kSchemaVersion = "pubflow/1";

enum class WorkflowFormat { Json, Xml };

struct ParseOptions {
  int default_max_attempts = 3;
};

namespace io_detail {

inline const std::set<std::string> kTaskFields = {"id",      "kernel",    "deps",         "required_caps",
                                                  "validator", "max_attempts", "unfold_rule"};
inline const std::set<std::string> kKernelFields = {"name", "params", "inputs", "outputs", "duration"};
inline const std::set<std::string> kTopFields = {"schema", "batch_id", "tasks", "rules", "metadata"};

template <class T>
T get_as(const Json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw SchemaError(where + ": field '" + key + "' missing or mistyped");
  }
}

inline std::vector<std::string> string_list(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) return {};
  return get_as<std::vector<std::string>>(j, key, where);
}

}  // namespace io_detail

// ---------------------------------------------------------------------------
// JSON <-> model

inline Json kernel_to_json(const KernelSpec& k) {
  Json j{{"name", k.name}, {"params", k.params}, {"duration", k.declared_duration}};
  if (!k.inputs.empty()) j["inputs"] = k.inputs;
  if (!k.outputs.empty()) j["outputs"] = k.outputs;
  return j;
}

inline KernelSpec kernel_from_json(const Json& j, const std::string& where) {
  using namespace io_detail;
  if (!j.is_object()) throw SchemaError(where + ": kernel must be an object");
  KernelSpec k;
  k.name = get_as<std::string>(j, "name", where + " kernel");
  if (k.name.empty()) throw SchemaError(where + ": kernel name is empty");
  if (j.contains("params")) {
    if (!j["params"].is_object()) throw SchemaError(where + ": kernel params must be an object");
    k.params = j["params"];
  }
  k.inputs = string_list(j, "inputs", where);
  k.outputs = string_list(j, "outputs", where);
  if (j.contains("duration")) {
    k.declared_duration = get_as<double>(j, "duration", where);
    if (!(k.declared_duration > 0)) throw SchemaError(where + ": kernel duration must be positive");
  }
  return k;
}

inline Json task_to_json(const Task& t) {
  Json j = t.extra;
  j["id"] = t.id;
  j["kernel"] = kernel_to_json(t.kernel);
  j["deps"] = t.deps;
  j["required_caps"] = t.required_caps;
  j["max_attempts"] = t.max_attempts;
  if (t.validator) j["validator"] = *t.validator;
  if (t.unfold_rule) j["unfold_rule"] = *t.unfold_rule;
  return j;
}

inline Task task_from_json(const Json& j, const ParseOptions& opt = {}) {
  using namespace io_detail;
  if (!j.is_object()) throw SchemaError("task entry must be an object");
  if (!j.contains("id")) throw SchemaError("task without 'id'");
  Task t;
  t.id = get_as<std::string>(j, "id", "task");
  const std::string where = "task '" + t.id + "'";
  if (t.id.empty()) throw SchemaError("task with empty id");
  if (!j.contains("kernel")) throw SchemaError(where + ": missing 'kernel'");
  t.kernel = kernel_from_json(j["kernel"], where);
  for (auto& d : string_list(j, "deps", where)) t.deps.insert(std::move(d));
  for (auto& c : string_list(j, "required_caps", where)) t.required_caps.insert(std::move(c));
  if (j.contains("validator")) t.validator = get_as<std::string>(j, "validator", where);
  if (j.contains("unfold_rule")) t.unfold_rule = get_as<std::string>(j, "unfold_rule", where);
  t.max_attempts = j.contains("max_attempts") ? get_as<int>(j, "max_attempts", where) : opt.default_max_attempts;
  if (t.max_attempts < 1) throw SchemaError(where + ": max_attempts must be >= 1");
  for (const auto& [k, v] : j.items())
    if (!kTaskFields.contains(k)) t.extra[k] = v;
  return t;
}

inline Json rule_to_json(const UnfoldRule& r) {
  Json guard = Json::object();
  guard["min_workers"] = r.guard.min_workers;
  if (r.guard.capability) guard["capability"] = *r.guard.capability;
  if (r.guard.min_dataset_size) guard["min_dataset_size"] = *r.guard.min_dataset_size;
  Json tasks = Json::array();
  for (const auto& [_, t] : r.body) tasks.push_back(task_to_json(t));
  return Json{{"id", r.rule_id}, {"head", r.head}, {"guard", guard},
              {"tasks", tasks},  {"entry", r.entry}, {"exit", r.exit}};
}

inline UnfoldRule rule_from_json(const Json& j, const ParseOptions& opt = {}) {
  using namespace io_detail;
  if (!j.is_object()) throw SchemaError("rule entry must be an object");
  UnfoldRule r;
  r.rule_id = get_as<std::string>(j, "id", "rule");
  const std::string where = "rule '" + r.rule_id + "'";
  r.head = get_as<std::string>(j, "head", where);
  if (j.contains("guard")) {
    const Json& g = j["guard"];
    if (g.contains("min_workers")) r.guard.min_workers = get_as<int>(g, "min_workers", where + " guard");
    if (g.contains("capability")) r.guard.capability = get_as<std::string>(g, "capability", where + " guard");
    if (g.contains("min_dataset_size"))
      r.guard.min_dataset_size = get_as<double>(g, "min_dataset_size", where + " guard");
  }
  if (!j.contains("tasks") || !j["tasks"].is_array()) throw SchemaError(where + ": missing 'tasks' array");
  for (const auto& tj : j["tasks"]) {
    Task t = task_from_json(tj, opt);
    if (r.body.contains(t.id)) throw SchemaError(where + ": duplicate task id '" + t.id + "'");
    r.body.emplace(t.id, std::move(t));
  }
  for (auto& e : string_list(j, "entry", where)) r.entry.insert(std::move(e));
  for (auto& e : string_list(j, "exit", where)) r.exit.insert(std::move(e));
  validate_rule(r);
  return r;
}

/// Cross-reference checks shared by both formats.
inline void check_references(const WorkflowBatch& b) {
  for (const auto& [id, t] : b.tasks) {
    for (const auto& d : t.deps)
      if (!b.tasks.contains(d))
        throw SchemaError("task '" + id + "' depends on unknown task '" + d + "'");
    if (t.unfold_rule && !b.rules.contains(*t.unfold_rule))
      throw SchemaError("task '" + id + "' references unknown rule '" + *t.unfold_rule + "'");
  }
}

inline Json batch_to_json(const WorkflowBatch& b) {
  Json tasks = Json::array();
  for (const auto& [_, t] : b.tasks) tasks.push_back(task_to_json(t));
  Json rules = Json::array();
  for (const auto& [_, r] : b.rules) rules.push_back(rule_to_json(r));
  return Json{{"schema", std::string(kSchemaVersion)}, {"batch_id", b.batch_id}, {"tasks", tasks},
              {"rules", rules},           {"metadata", b.metadata}};
}

inline WorkflowBatch batch_from_json(const Json& j, const ParseOptions& opt = {}) {
  using namespace io_detail;
  if (!j.is_object()) throw SchemaError("workflow document must be an object");
  if (!j.contains("schema")) throw SchemaError("workflow: missing mandatory 'schema' field");
  if (j["schema"] != std::string(kSchemaVersion))
    throw SchemaError("workflow: unsupported schema '" + j["schema"].dump() + "'");
  WorkflowBatch b;
  b.batch_id = get_as<std::string>(j, "batch_id", "workflow");
  if (j.contains("metadata")) {
    if (!j["metadata"].is_object()) throw SchemaError("workflow: metadata must be an object");
    b.metadata = j["metadata"];
  }
  for (const auto& [k, v] : j.items())
    if (!kTopFields.contains(k)) b.metadata[k] = v;
  if (j.contains("rules")) {
    if (!j["rules"].is_array()) throw SchemaError("workflow: 'rules' must be an array");
    for (const auto& rj : j["rules"]) {
      UnfoldRule r = rule_from_json(rj, opt);
      if (b.rules.contains(r.rule_id)) throw SchemaError("duplicate rule id '" + r.rule_id + "'");
      b.rules.emplace(r.rule_id, std::move(r));
    }
  }
  if (!j.contains("tasks") || !j["tasks"].is_array()) throw SchemaError("workflow: missing 'tasks' array");
  for (const auto& tj : j["tasks"]) {
    Task t = task_from_json(tj, opt);
    if (b.tasks.contains(t.id)) throw SchemaError("duplicate task id '" + t.id + "'");
    b.tasks.emplace(t.id, std::move(t));
  }
  check_references(b);
  return b;
}

// ---------------------------------------------------------------------------
// XML mirror

namespace io_detail {

using boost::property_tree::ptree;

inline std::optional<std::string> attr(const ptree& node, const std::string& name) {
  if (auto a = node.get_child_optional("<xmlattr>." + name)) return a->data();
  return std::nullopt;
}

inline std::string require_attr(const ptree& node, const std::string& name, const std::string& where) {
  auto a = attr(node, name);
  if (!a) throw SchemaError(where + ": missing attribute '" + name + "'");
  return *a;
}

// Attribute values are strings; numbers, booleans and arrays are recovered
// when the text parses as JSON.
inline Json scalar(const std::string& text) {
  Json v = Json::parse(text, nullptr, false);
  if (v.is_discarded() || v.is_object() || v.is_string()) return Json(text);
  return v;
}

inline int to_int(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw SchemaError(where + ": '" + s + "' is not an integer");
  }
}

inline double to_double(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw SchemaError(where + ": '" + s + "' is not a number");
  }
}

inline Task task_from_xml(const ptree& node, const ParseOptions& opt) {
  Task t;
  auto id = attr(node, "id");
  if (!id || id->empty()) throw SchemaError("<task> without 'id'");
  t.id = *id;
  const std::string where = "<task id=\"" + t.id + "\">";
  bool have_kernel = false;
  for (const auto& [name, child] : node) {
    if (name == "kernel") {
      have_kernel = true;
      t.kernel.name = require_attr(child, "name", where + " <kernel>");
      if (auto d = attr(child, "duration")) {
        t.kernel.declared_duration = to_double(*d, where);
        if (!(t.kernel.declared_duration > 0)) throw SchemaError(where + ": kernel duration must be positive");
      }
      for (const auto& [kname, kchild] : child) {
        if (kname == "param")
          t.kernel.params[require_attr(kchild, "name", where + " <param>")] =
              scalar(require_attr(kchild, "value", where + " <param>"));
        else if (kname == "input")
          t.kernel.inputs.push_back(require_attr(kchild, "ref", where + " <input>"));
        else if (kname == "output")
          t.kernel.outputs.push_back(require_attr(kchild, "ref", where + " <output>"));
      }
    } else if (name == "dep") {
      t.deps.insert(require_attr(child, "ref", where + " <dep>"));
    } else if (name == "cap") {
      t.required_caps.insert(require_attr(child, "name", where + " <cap>"));
    }
  }
  if (!have_kernel) throw SchemaError(where + ": missing <kernel>");
  if (auto v = attr(node, "validator")) t.validator = *v;
  if (auto r = attr(node, "unfold_rule")) t.unfold_rule = *r;
  t.max_attempts = opt.default_max_attempts;
  if (auto m = attr(node, "max_attempts")) t.max_attempts = to_int(*m, where);
  if (t.max_attempts < 1) throw SchemaError(where + ": max_attempts must be >= 1");
  if (auto a = node.get_child_optional("<xmlattr>"))
    for (const auto& [k, v] : *a)
      if (!kTaskFields.contains(k)) t.extra[k] = scalar(v.data());
  return t;
}

inline UnfoldRule rule_from_xml(const ptree& node, const ParseOptions& opt) {
  UnfoldRule r;
  r.rule_id = require_attr(node, "id", "<rule>");
  const std::string where = "<rule id=\"" + r.rule_id + "\">";
  r.head = require_attr(node, "head", where);
  for (const auto& [name, child] : node) {
    if (name == "guard") {
      if (auto v = attr(child, "min_workers")) r.guard.min_workers = to_int(*v, where);
      if (auto v = attr(child, "capability")) r.guard.capability = *v;
      if (auto v = attr(child, "min_dataset_size")) r.guard.min_dataset_size = to_double(*v, where);
    } else if (name == "task") {
      Task t = task_from_xml(child, opt);
      if (r.body.contains(t.id)) throw SchemaError(where + ": duplicate task id '" + t.id + "'");
      r.body.emplace(t.id, std::move(t));
    } else if (name == "entry") {
      r.entry.insert(require_attr(child, "ref", where + " <entry>"));
    } else if (name == "exit") {
      r.exit.insert(require_attr(child, "ref", where + " <exit>"));
    }
  }
  validate_rule(r);
  return r;
}

}  // namespace io_detail

inline WorkflowBatch batch_from_xml(std::string_view text, const ParseOptions& opt = {}) {
  using namespace io_detail;
  ptree doc;
  try {
    std::istringstream in{std::string(text)};
    boost::property_tree::read_xml(in, doc);
  } catch (const boost::property_tree::xml_parser_error& e) {
    throw SyntaxError(std::string("malformed XML: ") + e.what());
  }
  auto root = doc.get_child_optional("workflow");
  if (!root) throw SchemaError("missing <workflow> root element");
  auto schema = attr(*root, "schema");
  if (!schema) throw SchemaError("<workflow>: missing mandatory 'schema' attribute");
  if (*schema != kSchemaVersion) throw SchemaError("<workflow>: unsupported schema '" + *schema + "'");

  WorkflowBatch b;
  b.batch_id = require_attr(*root, "batch_id", "<workflow>");
  if (auto a = root->get_child_optional("<xmlattr>"))
    for (const auto& [k, v] : *a)
      if (!kTopFields.contains(k)) b.metadata[k] = scalar(v.data());
  for (const auto& [name, child] : *root) {
    if (name == "task") {
      Task t = task_from_xml(child, opt);
      if (b.tasks.contains(t.id)) throw SchemaError("duplicate task id '" + t.id + "'");
      b.tasks.emplace(t.id, std::move(t));
    } else if (name == "rule") {
      UnfoldRule r = rule_from_xml(child, opt);
      if (b.rules.contains(r.rule_id)) throw SchemaError("duplicate rule id '" + r.rule_id + "'");
      b.rules.emplace(r.rule_id, std::move(r));
    } else if (name == "metadata") {
      for (const auto& [mname, entry] : child)
        if (mname == "entry")
          b.metadata[require_attr(entry, "key", "<metadata>")] =
              scalar(require_attr(entry, "value", "<metadata>"));
    }
  }
  check_references(b);
  return b;
}

inline WorkflowBatch parse_workflow(std::string_view bytes, WorkflowFormat format, const ParseOptions& opt = {}) {
  if (format == WorkflowFormat::Xml) return batch_from_xml(bytes, opt);
  Json doc = Json::parse(bytes.begin(), bytes.end(), nullptr, false);
  if (doc.is_discarded()) throw SyntaxError("malformed JSON workflow document");
  return batch_from_json(doc, opt);
}

inline std::string serialize_workflow(const WorkflowBatch& b) { return batch_to_json(b).dump(2) + "\n"; }

}  // namespace pubflow
