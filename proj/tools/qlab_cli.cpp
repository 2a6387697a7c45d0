#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "qlab/config.hpp"
#include "qlab/error.hpp"
#include "qlab/runner.hpp"

namespace {

void report(const std::string& kind, const std::string& msg) {
  std::cerr << nlohmann::json{{"kind", kind}, {"message", msg}, {"exit_code", 2}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"slow-fast quartic model lab"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, out_dir, preset;
  double tol = 0.0;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--tol", tol, "simulation rtol and atol");
  app.add_option("--preset", preset, "built-in configuration (fig3 ... fig6, fig7, fig9, fig11)");

  std::string scenario;
  const std::pair<const char*, const char*> commands[] = {
      {"simulate", "integrate the planar or six-dimensional model and classify the outcome"},
      {"entry-exit", "exit points by closed form, quadrature and simulation"},
      {"folds", "zeros, folds and transcritical point of the quartic"},
      {"equilibria", "equilibria with eigenvalues and stability"},
      {"continue-eq", "equilibrium branch in alpha with Hopf points"},
      {"continue-lc", "limit-cycle branches from every Hopf point"},
      {"plot", "regenerate SVG plots from an output directory"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);
  app.add_subcommand("config", "print the effective configuration as JSON");
  auto* sc = app.add_subcommand("scenario", "preset scenario");
  sc->add_option("name", scenario, "fig3, fig4, fig5, fig6, fig7, fig9 or fig11")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  qlab::RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = qlab::load_config(config_path);
    else if (command == "scenario") cfg = qlab::preset_config(scenario);
    else if (!preset.empty()) cfg = qlab::preset_config(preset);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (tol != 0.0) {
      if (!(tol > 0.0)) throw qlab::Error(qlab::ErrorKind::ConfigError, "--tol must be positive");
      cfg.rtol = cfg.atol = tol;
    }
  } catch (const qlab::Error& e) {
    report(std::string(qlab::to_string(e.kind())), e.what());
    return 2;
  }

  if (command == "config") {
    std::cout << qlab::to_json(cfg).dump(2) << '\n';
    return 0;
  }
  const qlab::RunOutcome r = qlab::run(cfg, command, scenario);
  if (r.exit_code != 0) {
    std::cerr << r.message << '\n';
    return r.exit_code;
  }
  for (const auto& a : r.artifacts) std::cout << cfg.output_dir << '/' << a << '\n';
  return 0;
}
