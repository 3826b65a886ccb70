#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "escape/scenario.h"
#include <nlohmann/json.hpp>

namespace escape {
namespace {

using nlohmann::json;

int LineOfOffset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(
                 std::count(text.begin(), text.begin() + offset, '\n'));
}

// Line of the first occurrence of a key, 0 if absent.
int LineOfKey(std::string_view text, std::string_view key) {
  const std::string quoted = "\"" + std::string(key) + "\"";
  const std::size_t pos = text.find(quoted);
  return pos == std::string_view::npos ? 0 : LineOfOffset(text, pos);
}

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  [[noreturn]] void Fail(std::string_view field, const std::string& what) const {
    throw ParseError("field '" + std::string(field) + "': " + what,
                     LineOfKey(text_, field));
  }

  const json& Require(const json& obj, std::string_view field) const {
    auto it = obj.find(field);
    if (it == obj.end()) Fail(field, "missing");
    return *it;
  }

  double Number(const json& v, std::string_view field) const {
    if (!v.is_number()) Fail(field, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) Fail(field, "not finite");
    return d;
  }

  Vec2 Point(const json& v, std::string_view field) const {
    if (!v.is_array() || v.size() != 2) Fail(field, "expected [x, y]");
    return {Number(v[0], field), Number(v[1], field)};
  }

  Pose2 Pose(const json& v, std::string_view field) const {
    if (!v.is_array() || v.size() != 3) Fail(field, "expected [x, y, theta]");
    return {Number(v[0], field), Number(v[1], field), Number(v[2], field)};
  }

 private:
  std::string_view text_;
};

json PoseJson(const Pose2& p) { return json::array({p.x, p.y, p.theta}); }

}  // namespace

std::string SerializeScenario(const Scenario& s) {
  json j;
  j["version"] = kScenarioFormatVersion;
  j["seed"] = s.seed;
  if (s.obstacles.bounds) {
    const Box& b = *s.obstacles.bounds;
    j["arena"] = json::array({b.min_x, b.min_y, b.max_x, b.max_y});
  } else {
    j["arena"] = nullptr;
  }
  json obstacles = json::array();
  for (const Polygon& poly : s.obstacles.polygons) {
    json verts = json::array();
    for (const Vec2& v : poly.vertices()) verts.push_back({v.x, v.y});
    obstacles.push_back(std::move(verts));
  }
  j["obstacles"] = std::move(obstacles);
  j["start"] = PoseJson(s.start);
  j["goal"] = PoseJson(s.goal);
  j["tolerance"] = {{"position", s.tolerance.position},
                    {"heading", s.tolerance.heading}};
  json features = json::array();
  for (Feature f : s.features.List()) features.push_back(FeatureName(f));
  j["features"] = std::move(features);
  json path = json::array();
  for (const Pose2& p : s.witness_path) path.push_back(PoseJson(p));
  j["witness_path"] = std::move(path);
  return j.dump(1) + "\n";
}

Scenario ParseScenario(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(),
                     LineOfOffset(text, e.byte > 0 ? e.byte - 1 : 0));
  }
  const Reader r(text);
  if (!j.is_object()) throw ParseError("scenario must be a JSON object", 1);

  const json& version = r.Require(j, "version");
  if (!version.is_number_integer() ||
      version.get<int>() != kScenarioFormatVersion) {
    r.Fail("version", "unsupported version " + version.dump());
  }

  Scenario s;
  if (auto it = j.find("seed"); it != j.end()) {
    if (!it->is_number_unsigned()) r.Fail("seed", "expected a non-negative integer");
    s.seed = it->get<std::uint64_t>();
  }

  if (auto it = j.find("arena"); it != j.end() && !it->is_null()) {
    if (!it->is_array() || it->size() != 4) {
      r.Fail("arena", "expected [min_x, min_y, max_x, max_y] or null");
    }
    Box b{r.Number((*it)[0], "arena"), r.Number((*it)[1], "arena"),
          r.Number((*it)[2], "arena"), r.Number((*it)[3], "arena")};
    if (!(b.max_x > b.min_x && b.max_y > b.min_y)) {
      r.Fail("arena", "empty box");
    }
    s.obstacles.bounds = b;
  }

  const json& obstacles = r.Require(j, "obstacles");
  if (!obstacles.is_array()) r.Fail("obstacles", "expected an array");
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    const json& poly = obstacles[i];
    if (!poly.is_array()) r.Fail("obstacles", "polygon " + std::to_string(i) + " is not an array");
    std::vector<Vec2> verts;
    for (const json& v : poly) verts.push_back(r.Point(v, "obstacles"));
    try {
      s.obstacles.polygons.emplace_back(std::move(verts));
    } catch (const InvalidArgument& e) {
      r.Fail("obstacles", "polygon " + std::to_string(i) + ": " + e.what());
    }
  }

  s.start = r.Pose(r.Require(j, "start"), "start");
  s.goal = r.Pose(r.Require(j, "goal"), "goal");

  if (auto it = j.find("tolerance"); it != j.end()) {
    if (!it->is_object()) r.Fail("tolerance", "expected an object");
    s.tolerance.position = r.Number(r.Require(*it, "position"), "position");
    s.tolerance.heading = r.Number(r.Require(*it, "heading"), "heading");
    if (s.tolerance.position < 0.0 || s.tolerance.heading < 0.0) {
      r.Fail("tolerance", "negative tolerance");
    }
  }

  if (auto it = j.find("features"); it != j.end()) {
    if (!it->is_array()) r.Fail("features", "expected an array of names");
    for (const json& name : *it) {
      if (!name.is_string()) r.Fail("features", "expected a string");
      const std::string n = name.get<std::string>();
      const std::optional<Feature> f = ParseFeature(n);
      if (!f) r.Fail("features", "unknown feature tag '" + n + "'");
      s.features.Insert(*f);
    }
  }

  if (auto it = j.find("witness_path"); it != j.end()) {
    if (!it->is_array()) r.Fail("witness_path", "expected an array of poses");
    for (const json& p : *it) s.witness_path.push_back(r.Pose(p, "witness_path"));
  }
  return s;
}

void SaveScenario(const Scenario& scenario, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << SerializeScenario(scenario);
  if (!out) throw Error("write failed: " + path.string());
}

Scenario LoadScenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParseScenario(buf.str());
}

}  // namespace escape
