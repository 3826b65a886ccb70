// escape: scenario generation, benchmarking, plotting and the policy server.
//
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "escape/action_mask.h"
#include "escape/episode_runner.h"
#include "escape/escape_env.h"
#include "escape/ipc.h"
#include "escape/policy.h"
#include "escape/report.h"
#include "escape/scenario.h"
#include "escape/svg_plot.h"
#include "escape/trace.h"

namespace fs = std::filesystem;
using namespace escape;

namespace {

constexpr int kUsage = 1;
constexpr int kRuntime = 2;

std::vector<Scenario> LoadScenarioSet(const fs::path& path) {
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& entry : fs::recursive_directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(path);
  }
  if (files.empty()) throw Error("no scenario files under " + path.string());
  std::vector<Scenario> out;
  for (const fs::path& f : files) {
    try {
      out.push_back(LoadScenario(f));
    } catch (const ParseError& e) {
      throw Error(f.string() + ": " + e.what());
    }
  }
  return out;
}

EnvSetup MakeSetup(const std::string& cache_dir) {
  EnvSetup setup;
  const DiscreteActionSet actions = BuildActionSpace(setup.limits);
  if (cache_dir.empty()) {
    setup.table = std::make_shared<const BoundaryTable>(PrecomputeBoundaryTable(
        setup.footprint, actions, setup.lidar, setup.limits.dt, setup.mask));
  } else {
    fs::create_directories(cache_dir);
    setup.table = std::make_shared<const BoundaryTable>(LoadOrBuildBoundaryTable(
        cache_dir, setup.footprint, actions, setup.lidar, setup.limits.dt,
        setup.mask));
  }
  return setup;
}

// "stdio" or "unix:/path".
std::unique_ptr<FdChannel> OpenChannel(const std::string& spec) {
  if (spec == "stdio") return std::make_unique<FdChannel>(STDIN_FILENO, STDOUT_FILENO);
  if (spec.rfind("unix:", 0) == 0 && spec.size() > 5) return AcceptUnix(spec.substr(5));
  throw CLI::ValidationError("--ipc", "expected 'stdio' or 'unix:PATH'");
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void PrintReport(const BenchmarkReport& r, std::ostream& out) {
  char line[160];
  out << "policy " << r.policy << "\n";
  std::snprintf(line, sizeof line, "%-10s %8s %9s %9s %9s %9s %9s\n", "class",
                "episodes", "planning", "control", "total", "collision", "steps");
  out << line;
  auto row = [&](const ClassStats& s) {
    std::snprintf(line, sizeof line, "%-10s %8d %9.3f %9.3f %9.3f %9.3f %9.1f\n",
                  s.label.c_str(), s.episodes, s.PlanningSuccessRate(),
                  s.ControlSuccessRate(), s.TotalSuccessRate(), s.CollisionRate(),
                  s.MeanSteps());
    out << line;
  };
  for (const ClassStats& s : r.classes) row(s);
  row(r.overall);
}

struct GenArgs {
  std::string out;
  int train = 0;
  int test = 360;
  std::uint64_t seed = 1;
};

int RunGen(const GenArgs& a) {
  const BenchmarkSets sets =
      BuildBenchmarkSets(GeneratorConfig{}, std::max(a.train, 1), a.test, a.seed);
  auto write = [](const std::vector<Scenario>& set, const fs::path& dir, int count) {
    fs::create_directories(dir);
    for (int i = 0; i < count; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "scenario_%05d.json", i);
      SaveScenario(set[i], dir / name);
    }
  };
  if (a.train > 0) write(sets.train, fs::path(a.out) / "train", a.train);
  write(sets.test, fs::path(a.out) / "test", a.test);
  std::cout << "wrote " << a.train << " train and " << a.test
            << " test scenarios to " << a.out << "\n";
  return 0;
}

struct BenchArgs {
  std::string scenarios;
  std::string policy = "guidance";
  double inflation = 0.2475;
  int episodes = 1;
  std::uint64_t seed = 0;
  std::string report;
  std::string ipc = "stdio";
  std::string transcript;
  std::string trace;
  int max_steps = 600;
  int timeout_ms = 5000;
  std::string table_cache;
};

int RunBench(const BenchArgs& a) {
  const std::vector<Scenario> scenarios = LoadScenarioSet(a.scenarios);
  EscapeEnv env(MakeSetup(a.table_cache));
  BenchmarkOptions options;
  options.episodes_per_scenario = a.episodes;
  options.seed = a.seed;
  options.episode.max_steps = a.max_steps;

  std::ofstream trace_file;
  std::unique_ptr<TraceWriter> writer;
  if (!a.trace.empty()) {
    trace_file.open(a.trace, std::ios::binary);
    if (!trace_file) throw Error("cannot write " + a.trace);
    writer = std::make_unique<TraceWriter>(trace_file);
    env.SetTraceWriter(writer.get());
  }

  IpcOptions ipc;
  ipc.timeout = std::chrono::milliseconds(a.timeout_ms);
  BenchmarkReport report;
  // With stdio as the channel, human output goes to stderr.
  std::ostream* human = &std::cout;
  if (a.policy == "guidance") {
    GuidancePolicy policy(a.inflation);
    report = RunBenchmark(scenarios, policy, env, options);
  } else if (a.policy == "random") {
    RandomPolicy policy(a.seed);
    report = RunBenchmark(scenarios, policy, env, options);
  } else if (a.policy == "external") {
    if (a.ipc == "stdio") human = &std::cerr;
    std::unique_ptr<FdChannel> channel = OpenChannel(a.ipc);
    std::ofstream transcript;
    std::unique_ptr<RecordingChannel> recorder;
    LineChannel* link = channel.get();
    if (!a.transcript.empty()) {
      transcript.open(a.transcript, std::ios::binary);
      if (!transcript) throw Error("cannot write " + a.transcript);
      recorder = std::make_unique<RecordingChannel>(*channel, transcript);
      link = recorder.get();
    }
    ExternalPolicy policy(*link, ipc);
    policy.Handshake(env.setup(), env.actions());
    report = RunBenchmark(scenarios, policy, env, options);
    policy.Finish();
  } else if (a.policy == "scripted") {
    if (a.transcript.empty()) {
      throw CLI::ValidationError("--transcript", "required for --policy scripted");
    }
    ReplayChannel replay(ReadFile(a.transcript));
    ExternalPolicy policy(replay, ipc);
    policy.Handshake(env.setup(), env.actions());
    report = RunBenchmark(scenarios, policy, env, options);
  } else {
    throw CLI::ValidationError("--policy",
                               "expected guidance, random, external or scripted");
  }
  if (!a.report.empty()) WriteReport(report, a.report);
  PrintReport(report, *human);
  return 0;
}

struct ServeArgs {
  std::string ipc = "stdio";
  std::string scenario;
  bool train_mode = false;
  int episodes = 0;
  std::string stage = "fixed";
  int max_steps = 400;
  std::uint64_t seed = 0;
  int timeout_ms = 5000;
  std::string table_cache;
};

int RunServe(const ServeArgs& a) {
  const std::vector<Scenario> scenarios = LoadScenarioSet(a.scenario);
  ServeOptions options;
  options.train_mode = a.train_mode;
  options.episodes = a.episodes;
  options.seed = a.seed;
  options.episode.max_steps = a.max_steps;
  if (a.stage == "fixed") {
    options.episode.stage = CurriculumStage::kFixedGoalNearEntrance;
  } else if (a.stage == "randomized") {
    options.episode.stage = CurriculumStage::kRandomizedGoal;
  } else {
    throw CLI::ValidationError("--stage", "expected fixed or randomized");
  }
  options.ipc.timeout = std::chrono::milliseconds(a.timeout_ms);
  EscapeEnv env(MakeSetup(a.table_cache));
  std::unique_ptr<FdChannel> channel = OpenChannel(a.ipc);
  const ServeSummary summary = RunServeSession(*channel, env, scenarios, options);
  std::cerr << "served " << summary.episodes << " episodes ("
            << summary.protocol_failures << " protocol failures)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"escape: dead-zone escape benchmark tools"};
  app.require_subcommand(1);

  GenArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen", "Generate train/test scenario sets");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--train", gen.train, "Training scenarios")->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--test", gen.test, "Test scenarios (stratified by class)")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "Base seed");

  BenchArgs bench;
  CLI::App* bench_cmd = app.add_subcommand("bench", "Run a policy over a scenario set");
  bench_cmd->add_option("--scenarios", bench.scenarios, "Scenario file or directory")->required();
  bench_cmd->add_option("--policy", bench.policy, "guidance | random | external | scripted");
  bench_cmd->add_option("--inflation", bench.inflation, "Guidance inflation radius (m)")->check(CLI::NonNegativeNumber);
  bench_cmd->add_option("--episodes", bench.episodes, "Episodes per scenario")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench.seed, "Run seed");
  bench_cmd->add_option("--report", bench.report, "Write the JSON report here");
  bench_cmd->add_option("--ipc", bench.ipc, "External policy channel: stdio | unix:PATH");
  bench_cmd->add_option("--transcript", bench.transcript, "Record (external) or replay (scripted) a client transcript");
  bench_cmd->add_option("--trace", bench.trace, "Write episode traces (JSON lines)");
  bench_cmd->add_option("--max-steps", bench.max_steps, "Step budget per episode")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--timeout-ms", bench.timeout_ms, "Client silence limit")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--table-cache", bench.table_cache, "Directory for the boundary table cache");

  std::string plot_trace;
  std::string plot_out;
  CLI::App* plot_cmd = app.add_subcommand("plot", "Render an episode trace as SVG");
  plot_cmd->add_option("--trace", plot_trace, "Trace file (last episode is drawn)")->required();
  plot_cmd->add_option("--out", plot_out, "SVG output path")->required();

  ServeArgs serve;
  CLI::App* serve_cmd = app.add_subcommand("serve", "Serve the environment to an external trainer");
  serve_cmd->add_option("--ipc", serve.ipc, "stdio | unix:PATH");
  serve_cmd->add_option("--scenario", serve.scenario, "Scenario file or directory")->required();
  serve_cmd->add_flag("--train-mode", serve.train_mode, "Enable hybrid guidance");
  serve_cmd->add_option("--episodes", serve.episodes, "Episode count (0 = until the client leaves)")->check(CLI::NonNegativeNumber);
  serve_cmd->add_option("--stage", serve.stage, "Curriculum stage: fixed | randomized");
  serve_cmd->add_option("--max-steps", serve.max_steps, "Step budget per episode")->check(CLI::PositiveNumber);
  serve_cmd->add_option("--seed", serve.seed, "Session seed");
  serve_cmd->add_option("--timeout-ms", serve.timeout_ms, "Client silence limit")->check(CLI::PositiveNumber);
  serve_cmd->add_option("--table-cache", serve.table_cache, "Directory for the boundary table cache");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*gen_cmd) return RunGen(gen);
    if (*bench_cmd) return RunBench(bench);
    if (*plot_cmd) {
      PlotTrajectory(plot_trace, plot_out);
      return 0;
    }
    if (*serve_cmd) return RunServe(serve);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "escape: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "escape: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
