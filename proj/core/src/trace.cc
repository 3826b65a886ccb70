#include "escape/trace.h"

#include <fstream>
#include <sstream>

#include "escape/errors.h"
#include <nlohmann/json.hpp>

namespace escape {
namespace {

using nlohmann::json;

json PoseJson(const Pose2& p) { return json::array({p.x, p.y, p.theta}); }

struct LineReader {
  int line;
  std::string_view where;

  [[noreturn]] void Fail(const std::string& what) const {
    throw ParseError(std::string(where) + what, line);
  }
  const json& Require(const json& obj, const char* field) const {
    auto it = obj.find(field);
    if (it == obj.end()) Fail(std::string("missing field '") + field + "'");
    return *it;
  }
  double Number(const json& v, const char* field) const {
    if (!v.is_number()) Fail(std::string("field '") + field + "' is not a number");
    return v.get<double>();
  }
  Pose2 Pose(const json& v, const char* field) const {
    if (!v.is_array() || v.size() != 3) {
      Fail(std::string("field '") + field + "' must be [x, y, theta]");
    }
    return {Number(v[0], field), Number(v[1], field), Number(v[2], field)};
  }
};

TraceHeader ParseHeader(const json& j, const LineReader& r) {
  TraceHeader h;
  const json& version = r.Require(j, "version");
  if (!version.is_number_integer() || version.get<int>() != kTraceFormatVersion) {
    r.Fail("unsupported trace version " + version.dump());
  }
  try {
    h.scenario = ParseScenario(r.Require(j, "scenario").dump());
  } catch (const ParseError& e) {
    r.Fail(std::string("scenario: ") + e.what());
  }
  const json& fp = r.Require(j, "footprint");
  if (!fp.is_array() || fp.size() != 2) r.Fail("footprint must be [half_length, half_width]");
  h.footprint.half_length = r.Number(fp[0], "footprint");
  h.footprint.half_width = r.Number(fp[1], "footprint");
  const json& lim = r.Require(j, "limits");
  h.limits = {r.Number(r.Require(lim, "omega_max"), "omega_max"),
              r.Number(r.Require(lim, "v_max"), "v_max"),
              r.Number(r.Require(lim, "dt"), "dt")};
  h.start = r.Pose(r.Require(j, "start"), "start");
  h.goal = r.Pose(r.Require(j, "goal"), "goal");
  if (auto it = j.find("seed"); it != j.end() && it->is_number_unsigned()) {
    h.seed = it->get<std::uint64_t>();
  }
  if (auto it = j.find("label"); it != j.end() && it->is_string()) {
    h.label = it->get<std::string>();
  }
  return h;
}

TraceStep ParseStep(const json& j, LineReader r) {
  TraceStep s;
  const json& step = r.Require(j, "step");
  if (!step.is_number_integer()) r.Fail("field 'step' is not an integer");
  s.step = step.get<int>();
  const std::string where = "step " + std::to_string(s.step) + ": ";
  r.where = where;
  s.pose = r.Pose(r.Require(j, "pose"), "pose");
  const json& cmd = r.Require(j, "cmd");
  if (!cmd.is_array() || cmd.size() != 2) r.Fail("field 'cmd' must be [omega, v]");
  s.command = {r.Number(cmd[0], "cmd"), r.Number(cmd[1], "cmd")};
  const json& rw = r.Require(j, "reward");
  s.reward = {r.Number(r.Require(rw, "iou"), "iou"),
              r.Number(r.Require(rw, "distance"), "distance"),
              r.Number(r.Require(rw, "time"), "time"),
              r.Number(r.Require(rw, "total"), "total")};
  const json& mask = r.Require(j, "mask");
  if (!mask.is_string()) r.Fail("field 'mask' is not a string");
  s.mask = mask.get<std::string>();
  const json& source = r.Require(j, "source");
  const auto src = source.is_string() ? ParseSource(source.get<std::string>())
                                      : std::nullopt;
  if (!src) r.Fail("unknown source " + source.dump());
  s.source = *src;
  const json& terminal = r.Require(j, "terminal");
  if (!terminal.is_boolean()) r.Fail("field 'terminal' is not a boolean");
  s.terminal = terminal.get<bool>();
  const json& cause = r.Require(j, "cause");
  const auto c = cause.is_string() ? ParseCause(cause.get<std::string>())
                                   : std::nullopt;
  if (!c) r.Fail("unknown cause " + cause.dump());
  s.cause = *c;
  return s;
}

}  // namespace

std::string FormatTraceHeader(const TraceHeader& h) {
  json j;
  j["type"] = "header";
  j["version"] = kTraceFormatVersion;
  j["label"] = h.label;
  j["seed"] = h.seed;
  j["footprint"] = {h.footprint.half_length, h.footprint.half_width};
  j["limits"] = {{"omega_max", h.limits.omega_max},
                 {"v_max", h.limits.v_max},
                 {"dt", h.limits.dt}};
  j["start"] = PoseJson(h.start);
  j["goal"] = PoseJson(h.goal);
  j["scenario"] = json::parse(SerializeScenario(h.scenario));
  return j.dump();
}

std::string FormatTraceStep(const TraceStep& s) {
  json j;
  j["type"] = "step";
  j["step"] = s.step;
  j["pose"] = PoseJson(s.pose);
  j["cmd"] = {s.command.omega, s.command.v};
  j["reward"] = {{"iou", s.reward.iou_term},
                 {"distance", s.reward.distance_term},
                 {"time", s.reward.time_term},
                 {"total", s.reward.total}};
  j["mask"] = s.mask;
  j["source"] = SourceName(s.source);
  j["terminal"] = s.terminal;
  j["cause"] = CauseName(s.cause);
  return j.dump();
}

TraceWriter::TraceWriter(std::ostream& out, std::string label)
    : out_(out), label_(std::move(label)) {}

void TraceWriter::WriteHeader(const TraceHeader& header) {
  TraceHeader h = header;
  if (h.label.empty()) h.label = label_;
  out_ << FormatTraceHeader(h) << '\n';
}

void TraceWriter::WriteStep(const TraceStep& step) {
  out_ << FormatTraceStep(step) << '\n';
}

std::vector<Trace> ParseTraces(std::string_view text) {
  std::vector<Trace> traces;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    LineReader r{line_no, {}};
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      r.Fail(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) r.Fail("record is not an object");
    const json& type = r.Require(j, "type");
    if (type == "header") {
      traces.push_back({ParseHeader(j, r), {}});
    } else if (type == "step") {
      if (traces.empty()) r.Fail("step record before any header");
      traces.back().steps.push_back(ParseStep(j, r));
    } else {
      r.Fail("unknown record type " + type.dump());
    }
  }
  return traces;
}

Trace ParseTrace(std::string_view text) {
  std::vector<Trace> traces = ParseTraces(text);
  if (traces.empty()) throw ParseError("trace has no header record");
  return std::move(traces.front());
}

std::vector<Trace> LoadTraces(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParseTraces(buf.str());
}

}  // namespace escape
