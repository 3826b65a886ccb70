// Acceptance suite: one PASS/FAIL line per criterion. Tolerances and sample
// sizes are fixed here; exit status is nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "escape/action_mask.h"
#include "escape/episode_runner.h"
#include "escape/escape_env.h"
#include "escape/geometry.h"
#include "escape/grid_planner.h"
#include "escape/ipc.h"
#include "escape/kinematics.h"
#include "escape/lidar.h"
#include "escape/policy.h"
#include "escape/report.h"
#include "escape/scenario.h"
#include "escape/trace.h"
#include "ipc_client.h"
#include "replay.h"
#include "scenario_oracle.h"

namespace escape {
namespace {

constexpr double kKinematicsTol = 1e-9;
constexpr double kRadiusTol = 1e-9;
constexpr int kSplitStepSamples = 1000;
constexpr int kMaskPairs = 1200;
constexpr double kMaxRejectionRate = 0.10;
constexpr double kSweepDs = 0.005;
constexpr int kScenarioSamples = 100;
constexpr int kPlannerScenarios = 200;
constexpr double kMaxInflation = 0.2475;
constexpr int kTrendScenarios = 360;
constexpr double kTrendRadii[] = {0.18, 0.20, 0.23, 0.25};
constexpr double kTrendTol = 0.02;
constexpr int kMaskEpisodes = 200;

struct Verdict {
  bool pass = false;
  std::string detail;
};

const EnvSetup& Setup() {
  static const EnvSetup setup = EnvSetup::Default();
  return setup;
}

std::string Fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

bool Near(const Pose2& a, const Pose2& b, double tol) {
  return std::abs(a.x - b.x) <= tol && std::abs(a.y - b.y) <= tol &&
         std::abs(NormalizeAngle(a.theta - b.theta)) <= tol;
}

Scenario MakeScenario(int i, int count, std::uint64_t seed) {
  return Generate(ConfigForClass(GeneratorConfig{}, ClassForIndex(i % count, count)), seed);
}

// Hand-evaluated closed-form endpoints, then split-step composition.
Verdict Kinematics() {
  const double pi = std::numbers::pi;
  struct Case {
    Pose2 from;
    VelocityCommand cmd;
    double dt;
    Pose2 expect;
  };
  const Case cases[] = {
      {{0, 0, 0}, {1, 1}, pi / 2, {1, 1, pi / 2}},
      {{0, 0, 0}, {-1, 1}, pi / 2, {1, -1, -pi / 2}},
      {{0, 0, 0}, {1, -1}, pi / 2, {-1, -1, pi / 2}},
      {{0, 0, 0}, {0, 0.3}, 0.2, {0.06, 0, 0}},
      {{1, 2, pi / 2}, {0, 0.5}, 2.0, {1, 3, pi / 2}},
      {{0, 0, 0}, {1, 0}, 0.2, {0, 0, 0.2}},
      {{0, 0, 0}, {2, 1}, pi, {0, 0, 0}},
      {{0, 0, pi / 2}, {1, 1}, pi / 2, {-1, 1, pi}},
  };
  int bad = 0;
  for (const Case& c : cases) bad += !Near(IntegrateArc(c.from, c.cmd, c.dt), c.expect, kKinematicsTol);

  std::mt19937_64 rng(20);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int split_bad = 0;
  for (int i = 0; i < kSplitStepSamples; ++i) {
    const Pose2 p{5 * u(rng), 5 * u(rng), pi * u(rng)};
    const VelocityCommand cmd{u(rng), 0.3 * u(rng)};
    const double t = 0.5 * (u(rng) + 1.0) + 1e-3;
    const double s = (u(rng) + 1.0) / 2.0;
    const Pose2 whole = IntegrateArc(p, cmd, t);
    const Pose2 split = IntegrateArc(IntegrateArc(p, cmd, s * t), cmd, (1 - s) * t);
    split_bad += !Near(whole, split, kKinematicsTol);
  }
  return {bad == 0 && split_bad == 0,
          Fmt("%d/%zu closed-form mismatches, %d/%d split-step mismatches", bad,
              std::size(cases), split_bad, kSplitStepSamples)};
}

Verdict ActionSpace() {
  const MotionLimits lim;
  const DiscreteActionSet set = BuildActionSpace(lim);
  int bad = set.size() == 42 ? 0 : 1;
  bad += !(set[0].command == VelocityCommand{lim.omega_max, 0.0});
  bad += !(set[1].command == VelocityCommand{-lim.omega_max, 0.0});
  for (int i = 0; i < 10; ++i) {
    const double r = 0.01 * std::pow(2.0, i);
    // Largest (omega, v) on the radius line inside the limit box.
    const double omega = std::min(lim.omega_max, lim.v_max / r);
    const double v = omega * r;
    const double signs[4][2] = {{1, 1}, {-1, 1}, {1, -1}, {-1, -1}};
    for (int s = 0; s < 4; ++s) {
      const DiscreteAction& a = set[2 + 4 * i + s];
      bad += std::abs(a.command.omega - signs[s][0] * omega) > kRadiusTol;
      bad += std::abs(a.command.v - signs[s][1] * v) > kRadiusTol;
      bad += std::abs(TurningRadius(a.command) - r) > kRadiusTol;
      bad += std::abs(a.radius - r) > kRadiusTol;
    }
  }
  return {bad == 0, Fmt("%zu actions, %d mismatches", set.size(), bad)};
}

// Random collision-free poses in generated scenarios: half jittered around
// the witness path (cluttered), half uniform in the arena.
Verdict MaskSoundness() {
  const EnvSetup& env = Setup();
  const DiscreteActionSet set = BuildActionSpace(env.limits);
  std::mt19937_64 rng(33);
  int pairs = 0, violations = 0, rejected = 0, oracle_valid = 0;
  for (int sc = 0; pairs < kMaskPairs; ++sc) {
    const Scenario s = MakeScenario(sc, 60, 5000 + sc);
    const Box arena = *s.obstacles.bounds;
    std::uniform_real_distribution<double> ux(arena.min_x, arena.max_x), uy(arena.min_y, arena.max_y);
    std::uniform_real_distribution<double> ut(-std::numbers::pi, std::numbers::pi);
    std::normal_distribution<double> jitter(0.0, 0.05);
    for (int k = 0; k < 20 && pairs < kMaskPairs;) {
      Pose2 p;
      if (k % 2 == 0) {
        const Pose2& w = s.witness_path[rng() % s.witness_path.size()];
        p = {w.x + jitter(rng), w.y + jitter(rng), w.theta + 4 * jitter(rng)};
      } else {
        p = {ux(rng), uy(rng), ut(rng)};
      }
      if (Collides(env.footprint, p, s.obstacles)) continue;
      ++k;
      ++pairs;
      const ActionValidity mask = ComputeMask(SimulateScan(p, s.obstacles, env.lidar), *env.table);
      const ActionValidity truth = BruteForceMask(env.footprint, p, set, s.obstacles, env.limits.dt, kSweepDs);
      for (std::size_t a = 0; a < kActionCount; ++a) {
        violations += mask.valid[a] && !truth.valid[a];
        oracle_valid += truth.valid[a];
        rejected += truth.valid[a] && !mask.valid[a];
      }
    }
  }
  const double rate = oracle_valid > 0 ? static_cast<double>(rejected) / oracle_valid : 0.0;
  return {violations == 0 && rate < kMaxRejectionRate,
          Fmt("%d pairs, %d unsound, conservative rejection %.4f (limit %.2f)", pairs,
              violations, rate, kMaxRejectionRate)};
}

Verdict ScalingLaw() {
  const Footprint fp;
  const MotionLimits lim;
  const DiscreteActionSet set = BuildActionSpace(lim);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int checks = 0, bad = 0;
  double worst = 0.0;
  for (int scene = 0; scene < 10; ++scene) {
    ObstacleSet obs;
    while (obs.polygons.size() < 6) {
      const Polygon r = Polygon::Rectangle({1.2 * u(rng), 1.2 * u(rng)}, 0.05 + 0.2 * (u(rng) + 1) / 2,
                                           0.05 + 0.2 * (u(rng) + 1) / 2, u(rng));
      if (!Intersects(r, FootprintAt(fp, {0, 0, 0}))) obs.polygons.push_back(r);
    }
    for (std::size_t i = 2; i < kActionCount; ++i) {
      const DiscreteAction& a = set[i];
      for (double k : {0.25, 0.5}) {
        const VelocityCommand scaled = ScaleAction(a, k, lim);
        const double t_full = MaxFreeDuration(fp, {0, 0, 0}, a.command, obs, 20.0, kSweepDs);
        const double t_k = MaxFreeDuration(fp, {0, 0, 0}, scaled, obs, 20.0 / k, kSweepDs);
        // Back to arc length at full speed.
        const double err = std::abs(t_k * k - t_full) * ArcRate(fp, a.command);
        worst = std::max(worst, err);
        bad += err > kSweepDs + 1e-12;
        ++checks;
      }
    }
  }
  return {bad == 0, Fmt("%d checks, worst |k*dS_k - dS| = %.2e m (ds %.3f)", checks, worst, kSweepDs)};
}

// Recovers each witness step's command and sweeps it.
Verdict ScenarioConstruction() {
  const Footprint fp;
  const MotionLimits lim;
  const DiscreteActionSet set = BuildActionSpace(lim);
  std::vector<VelocityCommand> candidates{{0.0, lim.v_max}};
  for (const DiscreteAction& a : set) candidates.push_back(a.command);
  const FeatureThresholds th;
  int collisions = 0, unexplained = 0, tag_mismatch = 0;
  for (int i = 0; i < kScenarioSamples; ++i) {
    const Scenario s = MakeScenario(i, kScenarioSamples, 7000 + i);
    for (std::size_t j = 0; j + 1 < s.witness_path.size(); ++j) {
      const Pose2& from = s.witness_path[j];
      const VelocityCommand* cmd = nullptr;
      for (const VelocityCommand& c : candidates) {
        if (Near(IntegrateArc(from, c, lim.dt), s.witness_path[j + 1], 1e-9)) {
          cmd = &c;
          break;
        }
      }
      if (!cmd) {
        ++unexplained;
        continue;
      }
      collisions += FirstSweptCollision(fp, from, *cmd, lim.dt, s.obstacles, kSweepDs).has_value();
    }
    tag_mismatch += oracle::RemeasureTags(s, fp, th) != s.features || s.features != FeaturesOf(ClassForIndex(i, kScenarioSamples));
  }
  return {collisions == 0 && unexplained == 0 && tag_mismatch == 0,
          Fmt("%d scenarios, %d colliding steps, %d unexplained steps, %d tag mismatches",
              kScenarioSamples, collisions, unexplained, tag_mismatch)};
}

Verdict PlannerSafety() {
  const Footprint fp;
  const MotionLimits lim;
  int feasible = 0, collided = 0, unfinished = 0, tried = 0;
  for (int i = 0; feasible < kPlannerScenarios && i < 20 * kPlannerScenarios; ++i) {
    const Scenario s = MakeScenario(i, 100, 9000 + i);
    ++tried;
    const testing::ReplayOutcome r = testing::ReplayGuidance(s, kMaxInflation, fp, lim);
    if (!r.planned) continue;
    ++feasible;
    collided += r.collided;
    unfinished += !r.collided && std::hypot(r.final_pose.x - s.goal.x, r.final_pose.y - s.goal.y) > 0.05;
  }
  return {feasible == kPlannerScenarios && collided == 0,
          Fmt("%d feasible of %d generated, %d collisions, %d short of goal", feasible, tried,
              collided, unfinished)};
}

Verdict Trend() {
  const GeneratorConfig base;
  const BenchmarkSets sets = BuildBenchmarkSets(base, 1, kTrendScenarios, 42);
  std::vector<double> planning, control;
  std::string rates;
  for (double r : kTrendRadii) {
    GuidancePolicy policy(r);
    EscapeEnv env(Setup());
    BenchmarkOptions opts;
    opts.seed = 1;
    const BenchmarkReport report = RunBenchmark(sets.test, policy, env, opts);
    planning.push_back(report.overall.PlanningSuccessRate());
    control.push_back(report.overall.ControlSuccessRate());
    rates += Fmt(" %.2f:(%.3f,%.3f)", r, planning.back(), control.back());
  }
  int inversions = 0;
  for (std::size_t i = 1; i < planning.size(); ++i) {
    inversions += planning[i] > planning[i - 1] + kTrendTol;
    inversions += control[i] < control[i - 1] - kTrendTol;
  }
  return {inversions == 0, Fmt("%d inversions; radius:(planning,control)", inversions) + rates};
}

Verdict MaskEnvConsistency() {
  EscapeEnv env(Setup());
  EpisodeConfig cfg;
  cfg.max_steps = 200;
  std::mt19937_64 rng(61);
  int collisions = 0, stuck = 0, successes = 0;
  long long steps = 0;
  for (int e = 0; e < kMaskEpisodes; ++e) {
    const Scenario s = MakeScenario(e, 50, 11000 + e % 50);
    Observation obs = env.Reset(s, cfg, e);
    while (true) {
      std::vector<int> valid;
      for (std::size_t a = 0; a < kActionCount; ++a) {
        if (obs.mask.valid[a]) valid.push_back(static_cast<int>(a));
      }
      if (valid.empty()) {
        ++stuck;
        break;
      }
      const StepResult r = env.StepAction(valid[rng() % valid.size()]);
      ++steps;
      obs = r.observation;
      if (r.terminal) {
        collisions += r.cause == TerminalCause::kCollision;
        successes += r.cause == TerminalCause::kSuccess;
        break;
      }
    }
  }
  return {collisions == 0, Fmt("%d episodes, %lld steps, %d collisions, %d boxed in, %d successes",
                               kMaskEpisodes, steps, collisions, stuck, successes)};
}

Verdict IpcDeterminism() {
  std::vector<Scenario> scenarios;
  for (int i = 0; i < 5; ++i) scenarios.push_back(MakeScenario(i, 5, 13000 + i));
  BenchmarkOptions opts;
  opts.seed = 5;
  opts.episode.max_steps = 60;

  testing::RandomMaskClient client(19);
  auto [server_end, client_end] = SocketPairChannels();
  std::thread t([&, c = client_end.get()] { client.Run(*c); });
  std::ostringstream live_trace, transcript;
  BenchmarkReport live;
  {
    RecordingChannel rec(*server_end, transcript);
    ExternalPolicy policy(rec);
    EscapeEnv env(Setup());
    TraceWriter writer(live_trace, policy.Label());
    env.SetTraceWriter(&writer);
    try {
      policy.Handshake(env.setup(), env.actions());
      live = RunBenchmark(scenarios, policy, env, opts);
      policy.Finish();
    } catch (...) {
      server_end->CloseWrite();
      t.join();
      throw;
    }
  }
  server_end->CloseWrite();
  t.join();

  ReplayChannel replay(transcript.str());
  ExternalPolicy policy(replay);
  EscapeEnv env(Setup());
  std::ostringstream replay_trace;
  TraceWriter writer(replay_trace, policy.Label());
  env.SetTraceWriter(&writer);
  policy.Handshake(env.setup(), env.actions());
  const BenchmarkReport replayed = RunBenchmark(scenarios, policy, env, opts);
  const bool trace_same = live_trace.str() == replay_trace.str();
  const bool report_same = FormatReport(live) == FormatReport(replayed);
  return {trace_same && report_same && !live_trace.str().empty() && live.overall.protocol_failures == 0,
          Fmt("%zu trace bytes %s, report %s", live_trace.str().size(),
              trace_same ? "identical" : "differ", report_same ? "identical" : "differs")};
}

}  // namespace
}  // namespace escape

int main() {
  using namespace escape;
  const std::pair<const char*, std::function<Verdict()>> criteria[] = {
      {"kinematics-exactness", Kinematics},
      {"action-space-construction", ActionSpace},
      {"mask-soundness", MaskSoundness},
      {"scaling-law", ScalingLaw},
      {"scenario-feasibility-by-construction", ScenarioConstruction},
      {"planner-safety-at-max-inflation", PlannerSafety},
      {"inflation-trend", Trend},
      {"mask-environment-consistency", MaskEnvConsistency},
      {"ipc-determinism", IpcDeterminism},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s: %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !v.pass;
  }
  return failed == 0 ? 0 : 1;
}
