#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "qlab/continuation.hpp"
#include "qlab/entry_exit.hpp"
#include "qlab/model.hpp"
#include "qlab/simulate.hpp"

namespace qlab {

struct SimulateBlock {
  bool full_model = false;
  /// Planar start; p2 < 0 selects (-b/a, epsilon).
  SlowFastState init{0.0, -1.0};
  /// Six-dimensional start; empty selects the rest state lifted to p2 = epsilon.
  std::vector<double> init_full;
  SimulationOptions sim;
  ClassifyOptions classify;
};

struct EntryExitBlock {
  /// Explicit entries; when empty `samples` points are spread over the admissible
  /// interval shrunk by `margin` at both ends.
  std::vector<double> p10;
  int samples = 20;
  double margin = 0.05;
  double delta = 0.0;  // 0 selects epsilon
  double p11_max = 0.0;
  bool simulate = true;
};

struct ContinueBlock {
  double alpha_lo = 0.01;
  double alpha_hi = 2.5;
  int samples = 400;
  LcOptions lc;
  /// r1 values of the diagram sweep; empty means the model quartic only.
  std::vector<double> r1_sweep;
};

struct RunConfig {
  std::string name = "custom";
  ModelParams model;
  SimulateBlock simulate;
  EntryExitBlock entry_exit;
  ContinueBlock cont;
  std::string output_dir = "out";
  double rtol = 1e-10;
  double atol = 1e-10;
};

/// Parses and validates a config document. Unknown keys, wrong types and violated
/// model invariants throw Error(ConfigError).
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);
/// Canonical form: every field explicit, keys sorted.
nlohmann::json to_json(const RunConfig& cfg);

/// Built-in scenario configs fig3 ... fig6, fig7, fig9, fig11.
RunConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();

/// 64-bit FNV-1a of the canonical config dump.
std::uint64_t config_hash(const RunConfig& cfg);

}  // namespace qlab
