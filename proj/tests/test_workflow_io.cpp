#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "support.hpp"

using namespace pubflow;
using namespace pubflow::testing;

namespace {

std::string slurp(const std::string& name) {
  std::ifstream in(std::string(PUBFLOW_SAMPLES) + "/" + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string with_tasks(const std::string& tasks) {
  return R"({"schema": "pubflow/1", "batch_id": "t", "tasks": [)" + tasks + "]}";
}

template <class E>
std::string error_of(const std::string& doc, WorkflowFormat f = WorkflowFormat::Json) {
  try {
    parse_workflow(doc, f);
  } catch (const E& e) {
    return e.what();
  }
  return "<no error>";
}

}  // namespace

TEST(ParseJson, SingleTask) {
  auto b = parse_workflow(with_tasks(R"({"id": "A", "kernel": {"name": "noop"}})"), WorkflowFormat::Json);
  EXPECT_EQ(b.tasks.size(), 1u);
  EXPECT_EQ(b.edge_count(), 0u);
  const Task& a = b.tasks.at("A");
  EXPECT_EQ(a.kernel.name, "noop");
  EXPECT_EQ(a.max_attempts, 3);
  EXPECT_DOUBLE_EQ(a.kernel.declared_duration, 1.0);
}

TEST(ParseJson, DanglingDependencyNamesTheMissingId) {
  auto msg = error_of<SchemaError>(with_tasks(R"({"id": "B", "kernel": {"name": "noop"}, "deps": ["X"]})"));
  EXPECT_NE(msg.find("'X'"), std::string::npos) << msg;
  EXPECT_NE(msg.find("'B'"), std::string::npos) << msg;
}

TEST(ParseJson, SchemaErrorsNameTheElement) {
  EXPECT_NE(error_of<SchemaError>(with_tasks(R"({"kernel": {"name": "noop"}})")).find("id"), std::string::npos);
  EXPECT_NE(error_of<SchemaError>(with_tasks(R"({"id": "K"})")).find("'K'"), std::string::npos);
  auto dup = error_of<SchemaError>(
      with_tasks(R"({"id": "D", "kernel": {"name": "noop"}}, {"id": "D", "kernel": {"name": "noop"}})"));
  EXPECT_NE(dup.find("'D'"), std::string::npos) << dup;
  EXPECT_NE(error_of<SchemaError>(with_tasks(R"({"id": "M", "kernel": {"name": "noop"}, "max_attempts": 0})"))
                .find("'M'"),
            std::string::npos);
}

TEST(ParseJson, SchemaVersionIsMandatory) {
  EXPECT_THROW(parse_workflow(R"({"batch_id": "t", "tasks": []})", WorkflowFormat::Json), SchemaError);
  EXPECT_THROW(parse_workflow(R"({"schema": "pubflow/9", "batch_id": "t", "tasks": []})", WorkflowFormat::Json),
               SchemaError);
}

TEST(ParseJson, MalformedDocumentIsSyntaxError) {
  EXPECT_THROW(parse_workflow("{\"schema\": ", WorkflowFormat::Json), SyntaxError);
  EXPECT_THROW(parse_workflow("<workflow", WorkflowFormat::Xml), SyntaxError);
}

TEST(ParseJson, UnknownFieldsArePreserved) {
  auto doc = R"({"schema": "pubflow/1", "batch_id": "t", "owner": "lab",
                 "tasks": [{"id": "A", "kernel": {"name": "noop"}, "priority": 7}]})";
  auto b = parse_workflow(doc, WorkflowFormat::Json);
  EXPECT_EQ(b.metadata.at("owner"), "lab");
  EXPECT_EQ(b.tasks.at("A").extra.at("priority"), 7);
  auto again = parse_workflow(serialize_workflow(b), WorkflowFormat::Json);
  EXPECT_EQ(again, b);
}

TEST(ParseJson, DefaultMaxAttemptsComesFromOptions) {
  auto b = parse_workflow(with_tasks(R"({"id": "A", "kernel": {"name": "noop"}})"), WorkflowFormat::Json,
                          ParseOptions{5});
  EXPECT_EQ(b.tasks.at("A").max_attempts, 5);
}

TEST(ParseXml, DiamondMatchesJsonSample) {
  auto from_json = parse_workflow(slurp("diamond.json"), WorkflowFormat::Json);
  auto from_xml = parse_workflow(slurp("diamond.xml"), WorkflowFormat::Xml);
  EXPECT_EQ(from_xml, from_json);
  EXPECT_EQ(from_xml.tasks.size(), 4u);
  EXPECT_EQ(from_xml.edge_count(), 4u);
}

TEST(ParseXml, RulesGuardsAndMetadata) {
  const char* doc = R"(<workflow schema="pubflow/1" batch_id="x">
  <metadata><entry key="general_dag" value="true"/></metadata>
  <task id="M" unfold_rule="r" max_attempts="2" validator="exit_status">
    <kernel name="noop"/>
    <cap name="gpu"/>
  </task>
  <rule id="r" head="noop">
    <guard min_workers="2" capability="gpu"/>
    <task id="a"><kernel name="noop"/></task>
    <task id="b"><kernel name="noop"/><dep ref="a"/></task>
    <entry ref="a"/>
    <exit ref="b"/>
  </rule>
</workflow>)";
  auto b = parse_workflow(doc, WorkflowFormat::Xml);
  EXPECT_TRUE(b.general_dag());
  const Task& m = b.tasks.at("M");
  EXPECT_EQ(m.max_attempts, 2);
  EXPECT_EQ(m.validator, "exit_status");
  EXPECT_EQ(m.required_caps, std::set<std::string>{"gpu"});
  const UnfoldRule& r = b.rules.at("r");
  EXPECT_EQ(r.guard.min_workers, 2);
  EXPECT_EQ(r.guard.capability, "gpu");
  EXPECT_EQ(r.body.at("b").deps, std::set<TaskId>{"a"});
  auto again = parse_workflow(serialize_workflow(b), WorkflowFormat::Json);
  EXPECT_EQ(again, b);
}

TEST(ParseXml, DanglingDependency) {
  const char* doc = R"(<workflow schema="pubflow/1" batch_id="x">
  <task id="A"><kernel name="noop"/><dep ref="X"/></task></workflow>)";
  auto msg = error_of<SchemaError>(doc, WorkflowFormat::Xml);
  EXPECT_NE(msg.find("'X'"), std::string::npos) << msg;
}

TEST(ParseXml, MissingKernelIsSchemaError) {
  auto msg = error_of<SchemaError>(R"(<workflow schema="pubflow/1" batch_id="x"><task id="Q"/></workflow>)",
                                   WorkflowFormat::Xml);
  EXPECT_NE(msg.find("Q"), std::string::npos);
}

TEST(AdaptFile, NodeCounts) {
  adapt::AdaptOptions compact;
  compact.layout = adapt::Layout::Compact;
  auto sketch = parse_workflow(serialize_workflow(adapt::generate_adapt_workflow(8, 1, 64, {}, compact)),
                               WorkflowFormat::Json);
  EXPECT_EQ(sketch.tasks.size(), 18u);
  int metis = 0, init = 0, mumps = 0, iter = 0;
  for (const auto& [id, t] : sketch.tasks) {
    metis += t.kernel.name == "metis";
    init += t.kernel.name == "init";
    mumps += t.kernel.name == "mumps";
    iter += t.kernel.name == "iter";
  }
  EXPECT_EQ(metis, 1);
  EXPECT_EQ(init, 8);
  EXPECT_EQ(mumps, 1);
  EXPECT_EQ(iter, 8);

  auto full = parse_workflow(serialize_workflow(adapt::generate_adapt_workflow(8, 1, 64, {})), WorkflowFormat::Json);
  EXPECT_EQ(full.tasks.size(), 20u);
}

// parse(serialize(b)) == b over random batches with rules and odd fields.
TEST(RoundTrip, RandomBatches) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    auto b = random_dag(rng, 1 + static_cast<int>(rng() % 10), 0.3);
    b.batch_id = "rt" + std::to_string(trial);
    for (auto& [id, t] : b.tasks) {
      t.kernel.params = Json{{"x", static_cast<double>(rng() % 1000) / 7.0}, {"s", "v" + std::to_string(rng() % 9)}};
      t.kernel.declared_duration = 0.5 + static_cast<double>(rng() % 8);
      t.max_attempts = 1 + static_cast<int>(rng() % 4);
      if (rng() % 3 == 0) t.required_caps = {"cpu", "gpu"};
      if (rng() % 4 == 0) t.validator = "exit_status";
      if (rng() % 5 == 0) t.extra["note"] = "n" + std::to_string(rng() % 100);
      if (rng() % 3 == 0) t.kernel.outputs = {id + ".out"};
    }
    if (rng() % 2 == 0) {
      UnfoldRule r;
      r.rule_id = "split";
      r.head = "noop";
      r.guard.min_workers = static_cast<int>(rng() % 4);
      r.guard.min_dataset_size = 1.5;
      r.body.emplace("a", make_task("a"));
      r.body.emplace("b", make_task("b", {"a"}));
      r.entry = {"a"};
      r.exit = {"b"};
      b.rules.emplace(r.rule_id, r);
      b.tasks.begin()->second.unfold_rule = "split";
    }
    if (rng() % 2 == 0) b.metadata["general_dag"] = true;
    auto text = serialize_workflow(b);
    auto back = parse_workflow(text, WorkflowFormat::Json);
    ASSERT_EQ(back, b) << text;
    EXPECT_EQ(serialize_workflow(back), text);
  }
}

TEST(Samples, CyclicFileParsesButFailsValidation) {
  auto b = parse_workflow(slurp("cyclic.json"), WorkflowFormat::Json);
  auto r = validate_structure(b);
  EXPECT_FALSE(r.ok);
  EXPECT_EQ(r.cycle.size(), 3u);
}
