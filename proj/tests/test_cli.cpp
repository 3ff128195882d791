#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli_app.hpp"
#include "support.hpp"

using namespace pubflow;
using namespace pubflow::testing;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string sample(const std::string& name) { return std::string(PUBFLOW_SAMPLES) + "/" + name; }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("pubflow-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()) + "-" +
            std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string read(const std::string& name) const {
    std::ifstream in(path(name));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }

  fs::path dir_;
};

bool is_json_lines(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  bool any = false;
  while (std::getline(in, line)) {
    if (!Json::accept(line)) return false;
    any = true;
  }
  return any;
}

}  // namespace

TEST_F(Cli, ValidateDiamond) {
  auto r = run({"validate", "--workflow", sample("diamond.json")});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "4 tasks, 4 edges, series-parallel: yes\n");
  auto x = run({"validate", "--workflow", sample("diamond.xml")});
  EXPECT_EQ(x.code, 0);
  EXPECT_EQ(x.out, r.out);
}

TEST_F(Cli, ValidateCycleShowsWitness) {
  auto r = run({"validate", "--workflow", sample("cyclic.json")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("cycle: A -> B -> C -> A"), std::string::npos) << r.out;
  auto j = run({"--json", "validate", "--workflow", sample("cyclic.json")});
  EXPECT_EQ(j.code, 1);
  EXPECT_EQ(Json::parse(j.out)["cycle"].size(), 3u);
}

TEST_F(Cli, ValidateMissingFile) {
  EXPECT_EQ(run({"validate", "--workflow", path("nope.json")}).code, 2);
}

TEST_F(Cli, ValidateBrokenDocumentIsDomainFailure) {
  write("bad.json", R"({"schema": "pubflow/1", "batch_id": "x", "tasks": [{"id": "B", "kernel": {"name": "noop"}, "deps": ["X"]}]})");
  auto r = run({"--json", "validate", "--workflow", path("bad.json")});
  EXPECT_EQ(r.code, 1);
  auto j = Json::parse(r.out);
  EXPECT_FALSE(j["valid"].get<bool>());
  EXPECT_NE(j["error"].get<std::string>().find("'X'"), std::string::npos);
}

TEST_F(Cli, GenerateAdaptCounts) {
  auto r = run({"generate-adapt", "--partitions", "8", "--iterations", "1", "--cells", "64", "-o", path("a.json")});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "20 tasks written to " + path("a.json") + "\n");
  auto b = parse_workflow(read("a.json"), WorkflowFormat::Json);
  EXPECT_EQ(b.tasks.size(), 20u);

  r = run({"--json", "generate-adapt", "--partitions", "1", "--iterations", "1", "--cells", "4", "-o", path("c.json")});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(Json::parse(r.out)["tasks"], 6);
  auto chain = parse_workflow(read("c.json"), WorkflowFormat::Json);
  EXPECT_TRUE(validate_structure(chain).series_parallel);
  EXPECT_EQ(run({"validate", "--workflow", path("c.json")}).code, 0);
}

TEST_F(Cli, GenerateAdaptBadGeometry) {
  auto r = run({"generate-adapt", "--partitions", "8", "--iterations", "1", "--cells", "8", "-o", path("x.json")});
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(fs::exists(path("x.json")));
  EXPECT_EQ(run({"generate-adapt", "--partitions", "2", "--iterations", "1", "--cells", "8", "--edges", "mesh", "-o",
                 path("x.json")})
                .code,
            2);
}

TEST_F(Cli, GeneratedStencilFileNeedsItsFlag) {
  run({"generate-adapt", "--partitions", "4", "--iterations", "2", "--cells", "16", "-o", path("s.json")});
  auto j = Json::parse(run({"--json", "validate", "--workflow", path("s.json")}).out);
  EXPECT_FALSE(j["series_parallel"].get<bool>());
  EXPECT_TRUE(j["general_dag"].get<bool>());
  EXPECT_TRUE(j["valid"].get<bool>());
}

TEST_F(Cli, SimulateAdaptWithEightWorkers) {
  run({"generate-adapt", "--partitions", "8", "--iterations", "2", "--cells", "64", "-o", path("a.json")});
  auto r = run({"simulate", "--workflow", path("a.json"), "--scenario", sample("eight-workers.json"), "--log",
                path("run.log")});
  EXPECT_EQ(r.code, 0) << r.err;
  auto report = Json::parse(r.out);
  EXPECT_TRUE(report["completed"].get<bool>());
  const auto log = read("run.log");
  EXPECT_EQ(report["messages_total"].get<std::size_t>(),
            static_cast<std::size_t>(std::count(log.begin(), log.end(), '\n')));
  EXPECT_TRUE(is_json_lines(log));

  auto a = run({"audit", "--log", path("run.log"), "--workflow", path("a.json")});
  EXPECT_EQ(a.code, 0);
  EXPECT_EQ(a.out, "0 violations\n");
}

TEST_F(Cli, SimulateFaultyScenario) {
  run({"generate-adapt", "--partitions", "8", "--iterations", "2", "--cells", "64", "-o", path("a.json")});
  auto r = run({"--json", "simulate", "--workflow", path("a.json"), "--scenario", sample("eight-workers-faulty.json"),
                "--log", path("run.log")});
  EXPECT_EQ(r.code, 0) << r.err;
  auto report = Json::parse(r.out);
  EXPECT_TRUE(report["completed"].get<bool>());
  EXPECT_GE(report["re_executions"].get<int>(), 1);
  EXPECT_EQ(run({"audit", "--log", path("run.log"), "--workflow", path("a.json")}).code, 0);
}

TEST_F(Cli, SimulateWithoutWorkers) {
  auto r = run({"simulate", "--workflow", sample("single.json"), "--scenario", sample("no-workers.json"), "--log",
                path("run.log")});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(Json::parse(r.out)["completed"].get<bool>());
}

TEST_F(Cli, SimulateSeedOverride) {
  run({"generate-adapt", "--partitions", "4", "--iterations", "2", "--cells", "16", "-o", path("a.json")});
  auto go = [&](const std::string& seed, const std::string& log) {
    return run({"simulate", "--workflow", path("a.json"), "--scenario", sample("eight-workers.json"), "--log",
                path(log), "--seed", seed})
        .code;
  };
  EXPECT_EQ(go("42", "a.log"), 0);
  EXPECT_EQ(go("42", "b.log"), 0);
  EXPECT_EQ(go("43", "c.log"), 0);
  EXPECT_EQ(read("a.log"), read("b.log"));
  EXPECT_NE(read("a.log"), read("c.log"));
}

TEST_F(Cli, SimulateBadInputs) {
  EXPECT_EQ(run({"simulate", "--workflow", sample("cyclic.json"), "--scenario", sample("one-worker.json"), "--log",
                 path("r.log")})
                .code,
            2);
  write("scn.json", R"({"workers": [{"worker_id": "w", "speed": -1}]})");
  EXPECT_EQ(run({"simulate", "--workflow", sample("single.json"), "--scenario", path("scn.json"), "--log",
                 path("r.log")})
                .code,
            2);
  EXPECT_EQ(run({"simulate", "--workflow", sample("single.json"), "--scenario", path("missing.json"), "--log",
                 path("r.log")})
                .code,
            2);
}

TEST_F(Cli, AuditTamperedAndTruncatedLogs) {
  ASSERT_EQ(run({"simulate", "--workflow", sample("diamond.json"), "--scenario", sample("one-worker.json"), "--log",
                 path("run.log")})
                .code,
            0);
  auto log = parse_log(read("run.log"));
  // Drop A's verdict and renumber: B now starts on an unverified dependency.
  std::string tampered;
  Seq seq = 0;
  for (auto e : log) {
    if (e.kind == "verdict" && e.payload["task_id"] == "A") continue;
    e.seq = ++seq;
    tampered += envelope_to_json(e).dump() + "\n";
  }
  write("tampered.log", tampered);
  auto t = run({"audit", "--log", path("tampered.log"), "--workflow", sample("diamond.json")});
  EXPECT_EQ(t.code, 1);
  EXPECT_NE(t.out.find("A -> B"), std::string::npos) << t.out;
  auto tj = run({"--json", "audit", "--log", path("tampered.log"), "--workflow", sample("diamond.json")});
  EXPECT_GE(Json::parse(tj.out)["violations"].get<int>(), 1);

  const auto text = read("run.log");
  write("short.log", text.substr(0, text.size() / 2));
  EXPECT_EQ(run({"audit", "--log", path("short.log"), "--workflow", sample("diamond.json")}).code, 2);
}

TEST_F(Cli, ReportSummarizesALog) {
  run({"simulate", "--workflow", sample("diamond.json"), "--scenario", sample("one-worker.json"), "--log",
       path("run.log")});
  auto r = run({"--json", "report", "--log", path("run.log")});
  EXPECT_EQ(r.code, 0);
  auto j = Json::parse(r.out);
  EXPECT_EQ(j["tasks_verified"], 4);
  EXPECT_EQ(j["outcome"], "complete");
  EXPECT_EQ(j["re_executions"], 0);
  auto plain = run({"report", "--log", path("run.log")});
  EXPECT_NE(plain.out.find("tasks verified: 4 of 4"), std::string::npos);
}

TEST_F(Cli, ConfigFile) {
  write("cfg.json", R"({"heartbeat": {"H": 2, "k": 2}, "max_attempts_default": 1})");
  EXPECT_EQ(run({"--config", path("cfg.json"), "validate", "--workflow", sample("diamond.json")}).code, 0);
  write("bad.json", R"({"heartbeat": {"k": 1}})");
  EXPECT_EQ(run({"--config", path("bad.json"), "validate", "--workflow", sample("diamond.json")}).code, 2);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"validate"}).code, 2);
  EXPECT_EQ(run({"validate", "--workflow", sample("diamond.json"), "--format", "yaml"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

// Machine-readable mode prints one JSON document on every path.
TEST_F(Cli, JsonModeIsAlwaysJson) {
  run({"simulate", "--workflow", sample("diamond.json"), "--scenario", sample("one-worker.json"), "--log",
       path("run.log")});
  const std::vector<std::vector<std::string>> cases{
      {"validate", "--workflow", sample("diamond.json")},
      {"validate", "--workflow", sample("cyclic.json")},
      {"validate", "--workflow", path("missing.json")},
      {"simulate", "--workflow", sample("single.json"), "--scenario", sample("one-worker.json"), "--log", path("s.log")},
      {"simulate", "--workflow", sample("single.json"), "--scenario", sample("no-workers.json"), "--log", path("s.log")},
      {"generate-adapt", "--partitions", "2", "--iterations", "1", "--cells", "8", "-o", path("g.json")},
      {"generate-adapt", "--partitions", "8", "--iterations", "1", "--cells", "8", "-o", path("g.json")},
      {"audit", "--log", path("run.log"), "--workflow", sample("diamond.json")},
      {"report", "--log", path("run.log")},
  };
  for (auto args : cases) {
    args.insert(args.begin(), "--json");
    auto r = run(args);
    EXPECT_TRUE(Json::accept(r.out)) << args[1] << ": " << r.out;
  }
}
