#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "escape/escape_env.h"

namespace escape {

// Episode traces are JSON lines: one header record, then one record per
// step. See docs/trace-format.md.
inline constexpr int kTraceFormatVersion = 1;

struct TraceHeader {
  Scenario scenario;
  Footprint footprint;
  MotionLimits limits;
  Pose2 start;
  Pose2 goal;
  std::uint64_t seed = 0;
  std::string label;
};

struct TraceStep {
  int step = 0;
  Pose2 pose;
  VelocityCommand command;
  RewardBreakdown reward;
  std::string mask;
  ActionSource source = ActionSource::kPolicy;
  bool terminal = false;
  TerminalCause cause = TerminalCause::kNone;
};

struct Trace {
  TraceHeader header;
  std::vector<TraceStep> steps;
};

class TraceWriter {
 public:
  // `label` is copied into every header written.
  TraceWriter(std::ostream& out, std::string label = {});

  void WriteHeader(const TraceHeader& header);
  void WriteStep(const TraceStep& step);

 private:
  std::ostream& out_;
  std::string label_;
};

std::string FormatTraceHeader(const TraceHeader& header);
std::string FormatTraceStep(const TraceStep& step);

// A file may hold several episodes back to back; ParseTraces splits them at
// header records. Errors name the line and, for step records, the step.
std::vector<Trace> ParseTraces(std::string_view text);
Trace ParseTrace(std::string_view text);
std::vector<Trace> LoadTraces(const std::filesystem::path& path);

}  // namespace escape
