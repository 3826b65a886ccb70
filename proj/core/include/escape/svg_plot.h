#pragma once

#include <filesystem>
#include <string>

#include "escape/trace.h"

namespace escape {

// Obstacles filled black, start footprint outlined red, final footprint
// outlined blue, intermediate footprints on a red-to-blue gradient. An
// N-step trace draws N + 1 footprints.
std::string RenderTrajectorySvg(const Trace& trace);

void PlotTrajectory(const std::filesystem::path& trace_path,
                    const std::filesystem::path& out_path);

}  // namespace escape
