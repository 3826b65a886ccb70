#include <regex>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "escape/episode_runner.h"
#include "escape/errors.h"
#include "escape/report.h"
#include "escape/svg_plot.h"
#include "escape/trace.h"

namespace escape {
namespace {

using nlohmann::json;

const EnvSetup& SharedSetup() {
  static const EnvSetup setup = EnvSetup::Default();
  return setup;
}

Scenario OpenRoom(Pose2 start, Pose2 goal) {
  Scenario s;
  s.obstacles.bounds = Box{0, 0, 4, 4};
  s.obstacles.polygons.push_back(Polygon::Rectangle({0.5, 3.5}, 0.2, 0.1, 0.3));
  s.start = start;
  s.goal = goal;
  s.witness_path = {start, goal};
  return s;
}

// Drives `steps` fixed commands and returns the written trace text.
std::string RecordSteps(int steps) {
  std::ostringstream out;
  TraceWriter writer(out, "unit");
  EscapeEnv env(SharedSetup());
  env.SetTraceWriter(&writer);
  EpisodeConfig cfg;
  cfg.max_steps = steps;
  env.Reset(OpenRoom({1, 1, 0.2}, {3, 3, 0}), cfg, 4);
  while (env.active()) env.Step({0.3, 0.2});
  return out.str();
}

TEST(TraceFormat, RoundTrip) {
  const std::string text = RecordSteps(7);
  const Trace t = ParseTrace(text);
  EXPECT_EQ(t.header.label, "unit");
  EXPECT_EQ(t.header.seed, 4u);
  EXPECT_EQ(t.header.start, (Pose2{1, 1, 0.2}));
  EXPECT_EQ(t.header.footprint, Footprint{});
  ASSERT_EQ(t.steps.size(), 7u);
  EXPECT_EQ(t.steps.back().cause, TerminalCause::kTimeout);
  EXPECT_TRUE(t.steps.back().terminal);
  EXPECT_EQ(t.steps[0].mask.size(), 42u);
  std::string again = FormatTraceHeader(t.header) + "\n";
  for (const TraceStep& s : t.steps) again += FormatTraceStep(s) + "\n";
  EXPECT_EQ(again, text);
}

TEST(TraceFormat, SeveralEpisodesSplitAtHeaders) {
  const std::string text = RecordSteps(2) + RecordSteps(3);
  const auto traces = ParseTraces(text);
  ASSERT_EQ(traces.size(), 2u);
  EXPECT_EQ(traces[0].steps.size(), 2u);
  EXPECT_EQ(traces[1].steps.size(), 3u);
}

TEST(TraceFormat, MalformedPoseNamesLineAndStep) {
  std::string text = RecordSteps(4);
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  json j = json::parse(lines[3]);
  j["pose"] = {1.0, "oops"};
  lines[3] = j.dump();
  std::string bad;
  for (const auto& l : lines) bad += l + "\n";
  try {
    ParseTrace(bad);
    FAIL() << "no error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4);
    EXPECT_NE(std::string(e.what()).find("step 3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(ParseTrace(""), ParseError);
  EXPECT_THROW(ParseTrace(lines[1] + "\n"), ParseError);
}

std::vector<std::pair<int, int>> FootprintColors(const std::string& svg) {
  // (data-step, red channel) per footprint polygon, document order.
  std::vector<std::pair<int, int>> out;
  const std::regex re(R"re(class="footprint [a-z]+" data-step="(\d+)"[^>]*stroke="#([0-9a-fA-F]{2})00([0-9a-fA-F]{2})")re");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it) {
    out.push_back({std::stoi((*it)[1]), std::stoi((*it)[2], nullptr, 16)});
  }
  return out;
}

TEST(Svg, OneStepDrawsStartAndFinal) {
  const std::string svg = RenderTrajectorySvg(ParseTrace(RecordSteps(1)));
  EXPECT_EQ(FootprintColors(svg).size(), 2u);
  EXPECT_NE(svg.find("footprint start"), std::string::npos);
  EXPECT_NE(svg.find("footprint final"), std::string::npos);
  EXPECT_EQ(svg.find("footprint intermediate"), std::string::npos);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST(Svg, GradientIsMonotone) {
  const int n = 12;
  const auto colors = FootprintColors(RenderTrajectorySvg(ParseTrace(RecordSteps(n))));
  ASSERT_EQ(colors.size(), static_cast<std::size_t>(n + 1));
  EXPECT_EQ(colors.front().second, 0xff);
  EXPECT_EQ(colors.back().second, 0x00);
  for (std::size_t i = 0; i < colors.size(); ++i) {
    EXPECT_EQ(colors[i].first, static_cast<int>(i));
    if (i > 0) EXPECT_LT(colors[i].second, colors[i - 1].second);
  }
}

TEST(Svg, ObstaclesAreFilled) {
  const std::string svg = RenderTrajectorySvg(ParseTrace(RecordSteps(2)));
  EXPECT_NE(svg.find("class=\"obstacle\""), std::string::npos);
}

std::vector<Scenario> OpenRooms(int n) {
  std::vector<Scenario> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(OpenRoom({1 + 0.1 * i, 1, 0.3 * i}, {3, 2.5 - 0.1 * i, -0.2 * i}));
  }
  return out;
}

TEST(Report, GuidanceAtCircumscribedRadiusSolvesOpenRooms) {
  GuidancePolicy policy(0.2475);
  EscapeEnv env(SharedSetup());
  const BenchmarkReport r = RunBenchmark(OpenRooms(6), policy, env, {});
  EXPECT_EQ(r.overall.episodes, 6);
  EXPECT_DOUBLE_EQ(r.overall.TotalSuccessRate(), 1.0);
  EXPECT_TRUE(r.planner);
  ASSERT_TRUE(r.inflation.has_value());
  EXPECT_DOUBLE_EQ(*r.inflation, 0.2475);
}

TEST(Report, DeterministicAndDecomposes) {
  std::vector<Scenario> scenarios;
  for (int i = 0; i < 15; ++i) {
    scenarios.push_back(Generate(ConfigForClass(GeneratorConfig{}, ClassForIndex(i, 15)), 500 + i));
  }
  BenchmarkOptions opts;
  opts.seed = 5;
  opts.episodes_per_scenario = 2;
  for (double r : {0.18, 0.23}) {
    GuidancePolicy a(r), b(r);
    EscapeEnv env(SharedSetup());
    std::vector<EpisodeOutcome> outcomes;
    const BenchmarkReport ra = RunBenchmark(scenarios, a, env, opts, &outcomes);
    const BenchmarkReport rb = RunBenchmark(scenarios, b, env, opts);
    EXPECT_EQ(FormatReport(ra), FormatReport(rb));
    int both = 0;
    for (const EpisodeOutcome& o : outcomes) both += o.planned && o.success;
    EXPECT_EQ(ra.overall.successes, both);
    EXPECT_EQ(ra.overall.episodes, 30);
    for (const ClassStats& c : ra.classes) {
      EXPECT_EQ(c.episodes, 6);
      EXPECT_NEAR(c.TotalSuccessRate(), c.PlanningSuccessRate() * c.ControlSuccessRate(), 1e-12);
      for (double rate : {c.TotalSuccessRate(), c.PlanningSuccessRate(),
                          c.ControlSuccessRate(), c.CollisionRate()}) {
        EXPECT_GE(rate, 0.0);
        EXPECT_LE(rate, 1.0);
      }
    }
    const json j = json::parse(FormatReport(ra));
    EXPECT_EQ(j.at("classes").size(), 5u);
    EXPECT_EQ(j.at("classes").at(0).at("class"), "N+C+S+L");
    EXPECT_EQ(j.at("classes").at(4).at("class"), "simple");
    EXPECT_EQ(j.at("config_hash").get<std::string>().size(), 16u);
  }
}

TEST(Report, RandomPolicyRarelyEscapesNarrowExits) {
  std::vector<Scenario> scenarios;
  for (int i = 0; i < 12; ++i) {
    scenarios.push_back(Generate(ConfigForClass(GeneratorConfig{}, ScenarioClass::kN), 600 + i));
  }
  RandomPolicy policy(1);
  EscapeEnv env(SharedSetup());
  const BenchmarkReport r = RunBenchmark(scenarios, policy, env, {});
  EXPECT_FALSE(r.planner);
  EXPECT_LE(r.overall.TotalSuccessRate(), 0.1);
  const json j = json::parse(FormatReport(r));
  EXPECT_TRUE(j.at("overall").at("planning_success_rate").is_null());
}

TEST(Report, ConfigHashTracksInputs) {
  const auto rooms = OpenRooms(2);
  BenchmarkOptions a, b;
  b.seed = 1;
  EXPECT_EQ(BenchmarkConfigHash(rooms, "x", a), BenchmarkConfigHash(rooms, "x", a));
  EXPECT_NE(BenchmarkConfigHash(rooms, "x", a), BenchmarkConfigHash(rooms, "x", b));
  EXPECT_NE(BenchmarkConfigHash(rooms, "x", a), BenchmarkConfigHash(rooms, "y", a));
  EXPECT_EQ(Fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(Fnv1a("a"), 0xaf63dc4c8601ec8cULL);
}

}  // namespace
}  // namespace escape
