#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace qlab {

/// Renders SVG figures from the artifacts of one run directory: phase plane and time
/// series from trajectory.csv, bifurcation diagram from branch_eq.csv, branch_lc_*.csv
/// and markers.csv. The model is read back from manifest.json. Returns the files
/// written. Throws MissingArtifact when the manifest or every data file is absent.
std::vector<std::string> emit_plots(const std::filesystem::path& dir);

}  // namespace qlab
