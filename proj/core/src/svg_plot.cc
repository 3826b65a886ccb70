#include "escape/svg_plot.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "escape/errors.h"

namespace escape {
namespace {

std::string Points(const Polygon& poly) {
  std::string out;
  char buf[64];
  for (const Vec2& v : poly.vertices()) {
    std::snprintf(buf, sizeof buf, "%s%.4f,%.4f", out.empty() ? "" : " ", v.x,
                  -v.y);
    out += buf;
  }
  return out;
}

std::string Color(double t) {
  char buf[16];
  const int r = static_cast<int>(std::lround(255.0 * (1.0 - t)));
  const int b = static_cast<int>(std::lround(255.0 * t));
  std::snprintf(buf, sizeof buf, "#%02x00%02x", r, b);
  return buf;
}

}  // namespace

std::string RenderTrajectorySvg(const Trace& trace) {
  const TraceHeader& h = trace.header;
  std::vector<Pose2> poses{h.start};
  for (const TraceStep& s : trace.steps) poses.push_back(s.pose);

  Box view;
  if (h.scenario.obstacles.bounds) {
    view = *h.scenario.obstacles.bounds;
  } else {
    view = {h.start.x, h.start.y, h.start.x, h.start.y};
    auto grow = [&view](const Box& b) {
      view = {std::min(view.min_x, b.min_x), std::min(view.min_y, b.min_y),
              std::max(view.max_x, b.max_x), std::max(view.max_y, b.max_y)};
    };
    for (const Polygon& p : h.scenario.obstacles.polygons) grow(p.bounds());
    for (const Pose2& p : poses) grow(FootprintAt(h.footprint, p).bounds());
    grow(FootprintAt(h.footprint, h.goal).bounds());
  }
  const double pad = 0.1;
  const double w = view.Width() + 2 * pad;
  const double ht = view.Height() + 2 * pad;
  const double stroke = 0.004 * std::max(w, ht);

  std::ostringstream svg;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" "
                "viewBox=\"%.4f %.4f %.4f %.4f\" width=\"800\" height=\"%d\">\n",
                view.min_x - pad, -(view.max_y + pad), w, ht,
                static_cast<int>(std::lround(800.0 * ht / w)));
  svg << buf;
  svg << "<rect x=\"" << view.min_x - pad << "\" y=\"" << -(view.max_y + pad)
      << "\" width=\"" << w << "\" height=\"" << ht << "\" fill=\"white\"/>\n";
  if (h.scenario.obstacles.bounds) {
    const Box& b = *h.scenario.obstacles.bounds;
    svg << "<rect class=\"arena\" x=\"" << b.min_x << "\" y=\"" << -b.max_y
        << "\" width=\"" << b.Width() << "\" height=\"" << b.Height()
        << "\" fill=\"none\" stroke=\"black\" stroke-width=\"" << stroke * 2
        << "\"/>\n";
  }
  for (const Polygon& p : h.scenario.obstacles.polygons) {
    svg << "<polygon class=\"obstacle\" points=\"" << Points(p)
        << "\" fill=\"black\"/>\n";
  }
  svg << "<polygon class=\"goal\" points=\""
      << Points(FootprintAt(h.footprint, h.goal))
      << "\" fill=\"none\" stroke=\"#00a000\" stroke-dasharray=\""
      << stroke * 3 << "\" stroke-width=\"" << stroke << "\"/>\n";
  const std::size_t n = poses.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double t = n > 1 ? static_cast<double>(i) / (n - 1) : 0.0;
    const char* role = i == 0 ? "start" : (i + 1 == n ? "final" : "intermediate");
    svg << "<polygon class=\"footprint " << role << "\" data-step=\"" << i
        << "\" points=\"" << Points(FootprintAt(h.footprint, poses[i]))
        << "\" fill=\"none\" stroke=\"" << Color(t) << "\" stroke-width=\""
        << (i == 0 || i + 1 == n ? stroke * 2 : stroke) << "\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void PlotTrajectory(const std::filesystem::path& trace_path,
                    const std::filesystem::path& out_path) {
  const std::vector<Trace> traces = LoadTraces(trace_path);
  if (traces.empty()) throw ParseError("trace has no header record");
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw Error("cannot write " + out_path.string());
  out << RenderTrajectorySvg(traces.back());
}

}  // namespace escape
