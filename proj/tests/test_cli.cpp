#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "cli.hpp"
#include "neurotouch/config.hpp"
#include "support.hpp"

using namespace neurotouch;

namespace {

struct Result {
  int rc;
  std::string out, err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "neurotouch");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int rc = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {rc, out.str(), err.str()};
}

std::string source(const std::string& rel) {
  const char* src = std::getenv("NT_SOURCE_DIR");
  return (std::filesystem::path(src ? src : ".") / rel).string();
}

void write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

constexpr const char* kShortScenario =
    "[scene]\nduration_s = 1.5\nnoise_rate = 0.1\n"
    "[gesture]\ntype = Push\nfingers = 173,130\nstart_s = 0.3\nintensity_mm = 4\n"
    "attack_s = 0.1\nhold_s = 0.5\nrelease_s = 0.1\n";

}  // namespace

TEST(Cli, HelpAndUsage) {
  const auto h = invoke({"--help"});
  EXPECT_EQ(h.rc, cli::kOk);
  EXPECT_NE(h.out.find("simulate"), std::string::npos);
  EXPECT_NE(h.out.find("demo-serve"), std::string::npos);
  EXPECT_EQ(invoke({}).rc, cli::kUsageError);
  EXPECT_EQ(invoke({"frobnicate"}).rc, cli::kUsageError);
  EXPECT_EQ(invoke({"run", "--bogus"}).rc, cli::kUsageError);
  EXPECT_EQ(invoke({"run", "--in", "/nonexistent.ntrec", "--out", "x"}).rc, cli::kUsageError);
  EXPECT_EQ(invoke({"simulate", "--scenario", source("scenarios/basic.scn"), "--out", "/no/such/dir/x"}).rc,
            cli::kUsageError);
}

TEST(Cli, HelpListsEveryConfigKey) {
  for (const char* sub : {"run", "bench", "demo-serve"}) {
    const auto h = invoke({sub, "--help"});
    EXPECT_EQ(h.rc, cli::kOk);
    for (const auto& k : config_keys()) EXPECT_NE(h.out.find(k.key), std::string::npos) << sub << ' ' << k.key;
  }
}

TEST(Cli, DecodeAndConfigErrors) {
  testkit::TempDir d;
  write(d / "garbage.ntrec", "this is not a recording");
  write(d / "bad.cfg", "engine.r = 25\nengine.nope = 1\n");
  write(d / "bad.scn", "[scene]\nwhat = 1\n");
  write(d / "invalid.cfg", "engine.r = -1\n");

  auto r = invoke({"run", "--in", (d / "garbage.ntrec").string(), "--out", (d / "o.jsonl").string()});
  EXPECT_EQ(r.rc, cli::kDecodeError);
  EXPECT_NE(r.err.find("bad magic"), std::string::npos);
  EXPECT_EQ(invoke({"bench", "--in", (d / "garbage.ntrec").string()}).rc, cli::kDecodeError);

  r = invoke({"simulate", "--scenario", (d / "bad.scn").string(), "--out", (d / "x.ntrec").string()});
  EXPECT_EQ(r.rc, cli::kConfigError);
  EXPECT_NE(r.err.find("scenario line 2"), std::string::npos);

  ASSERT_EQ(invoke({"simulate", "--scenario", source("scenarios/basic.scn"), "--out", (d / "b.ntrec").string(),
                 "--seed", "5", "--events-csv", (d / "ev.csv").string()})
                .rc,
            cli::kOk);
  EXPECT_EQ(testkit::read_file(d / "ev.csv").rfind("t,x,y,p\n", 0), 0u);

  const auto rec = (d / "b.ntrec").string();
  r = invoke({"run", "--in", rec, "--out", (d / "o.jsonl").string(), "--config", (d / "bad.cfg").string()});
  EXPECT_EQ(r.rc, cli::kConfigError);
  EXPECT_NE(r.err.find("config line 2"), std::string::npos);
  EXPECT_EQ(invoke({"run", "--in", rec, "--out", (d / "o.jsonl").string(), "--set", "engine.r=abc"}).rc,
            cli::kConfigError);
  EXPECT_EQ(invoke({"run", "--in", rec, "--out", (d / "o.jsonl").string(), "--config", (d / "invalid.cfg").string()})
                .rc,
            cli::kConfigError);

  // predictions file that is not JSON lines
  write(d / "bad.jsonl", "{not json\n");
  EXPECT_EQ(invoke({"eval", "--pred", (d / "bad.jsonl").string(), "--labels", rec, "--report",
                 (d / "r.json").string()})
                .rc,
            cli::kDecodeError);
}

TEST(Cli, SimulateRunEvalBench) {
  testkit::TempDir d;
  write(d / "s.scn", kShortScenario);
  const auto rec = (d / "s.ntrec").string();
  auto r = invoke({"simulate", "--scenario", (d / "s.scn").string(), "--out", rec});
  ASSERT_EQ(r.rc, cli::kOk) << r.err;
  EXPECT_NE(r.err.find("1 scripts"), std::string::npos);

  r = invoke({"run", "--in", rec, "--out", (d / "o.jsonl").string(), "--seed", "9", "--set", "pipeline.threaded=false"});
  ASSERT_EQ(r.rc, cli::kOk) << r.err;
  EXPECT_NE(r.err.find("150 batches"), std::string::npos) << r.err;

  r = invoke({"eval", "--pred", (d / "o.jsonl").string(), "--labels", rec, "--report", (d / "r.json").string(),
           "--tables", (d / "t.csv").string()});
  ASSERT_EQ(r.rc, cli::kOk) << r.err;
  const auto report = nlohmann::json::parse(testkit::read_file(d / "r.json"));
  EXPECT_GT(report.at("observations").get<int>(), 100);
  EXPECT_GE(report.at("accuracy").get<double>(), 0.8);
  EXPECT_FALSE(testkit::read_file(d / "t.csv").empty());

  r = invoke({"bench", "--in", rec});
  ASSERT_EQ(r.rc, cli::kOk) << r.err;
  const auto bench = nlohmann::json::parse(r.out);
  EXPECT_EQ(bench.at("batches").get<int>(), 150);
  EXPECT_GT(bench.at("tracker_events_per_s").get<double>(), 0.0);
  ASSERT_EQ(invoke({"bench", "--in", rec, "--report", (d / "b.json").string()}).rc, cli::kOk);
  EXPECT_NO_THROW(nlohmann::json::parse(testkit::read_file(d / "b.json")));
}

TEST(Cli, RunIsDeterministic) {
  testkit::TempDir d;
  write(d / "s.scn", kShortScenario);
  const auto rec = (d / "s.ntrec").string();
  ASSERT_EQ(invoke({"simulate", "--scenario", (d / "s.scn").string(), "--out", rec}).rc, cli::kOk);
  for (const char* n : {"1", "2"}) {
    ASSERT_EQ(invoke({"run", "--in", rec, "--out", (d / ("o" + std::string(n))).string(), "--set",
                   "pipeline.record_latency=false"})
                  .rc,
              cli::kOk);
  }
  EXPECT_EQ(testkit::read_file(d / "o1"), testkit::read_file(d / "o2"));
}

TEST(Cli, DemoReplay) {
  testkit::TempDir d;
  write(d / "trace.jsonl",
        "{\"type\":\"finger\",\"t_ms\":20,\"id\":0,\"x\":0.1,\"y\":0.0,\"pressed\":true}\n"
        "{\"type\":\"finger\",\"t_ms\":120,\"id\":0,\"x\":0.3,\"y\":0.0,\"pressed\":true}\n"
        "{\"type\":\"finger\",\"t_ms\":300,\"id\":0,\"x\":0.3,\"y\":0.0,\"pressed\":false}\n");
  auto r = invoke({"demo-serve", "--replay", (d / "trace.jsonl").string(), "--out", (d / "p.jsonl").string()});
  ASSERT_EQ(r.rc, cli::kOk) << r.err;
  std::istringstream in(testkit::read_file(d / "p.jsonl"));
  std::string line;
  int n = 0;
  bool push = false;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("type"), "detection");
    push = push || j.at("gesture") == "Push";
    ++n;
  }
  EXPECT_GE(n, 80);  // 800 ms at 10 ms per push
  EXPECT_TRUE(push);

  write(d / "bad.jsonl", "{\"type\":\"hello\",\"version\":1}\n");
  r = invoke({"demo-serve", "--replay", (d / "bad.jsonl").string()});
  EXPECT_EQ(r.rc, cli::kDecodeError);
  EXPECT_NE(r.err.find("trace line 1"), std::string::npos);
  EXPECT_EQ(invoke({"demo-serve", "--sigma-px", "-3", "--replay", (d / "trace.jsonl").string()}).rc, cli::kConfigError);
}
