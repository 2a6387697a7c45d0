#pragma once

#include <string>
#include <vector>

#include "qlab/config.hpp"

namespace qlab {

struct RunOutcome {
  int exit_code = 0;  // 0 success, 2 config error, 3 numerical failure
  std::vector<std::string> artifacts;
  std::string message;
};

/// Commands: simulate, entry-exit, folds, equilibria, continue-eq, continue-lc,
/// scenario (with `arg` = preset name; the preset model replaces cfg.model) and plot.
/// Artifacts go to cfg.output_dir together with manifest.json. Library errors are
/// caught and recorded in error.json.
RunOutcome run(const RunConfig& cfg, const std::string& command, const std::string& arg = {});

}  // namespace qlab
