// diraclev CLI: band structures, crossing certification, effective models,
// magnetic spectra, 1D reductions, and the full verification pipeline.

#include <CLI11.hpp>
#include <iostream>

#include "diraclev/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"diraclev: Dirac crossings in weak magnetic fields, at desk scale"};
  app.require_subcommand(1);

  std::string config_path;
  diraclev::ScenarioConfig cfg;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "scenario config (JSON)");
    sub->add_option("--builtin", cfg.builtin, "builtin model: honeycomb | harper");
    sub->add_option("--hoppings", cfg.hoppings_file, "HoppingSet JSON file");
    sub->add_option("--problem", cfg.problem_file, "BlochProblem JSON file");
    sub->add_option("--out", cfg.output_dir, "output directory");
    sub->add_option("--flux", cfg.flux_list, "flux values p/q");
    sub->add_option("--mbz-grid", cfg.mbz_grid, "magnetic Brillouin zone grid");
    sub->add_option("--band-grid", cfg.band_grid, "band grid resolution");
    sub->add_option("--extent", cfg.lattice_extent, "finite lattice half-extent");
    sub->add_option("--seed", cfg.seed, "deterministic seed");
  };

  const std::vector<std::string> scenarios = {"bands",     "crossing",      "effmodel",
                                              "sections",  "hofstadter",    "semiclassical",
                                              "landau",    "feshbach-suite", "verify"};
  for (const auto& name : scenarios) add_common(app.add_subcommand(name));

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_path.empty()) {
      const std::string out_dir = cfg.output_dir;
      cfg = diraclev::ScenarioConfig::from_json_file(config_path);
      if (out_dir != "out") cfg.output_dir = out_dir;
    }
    cfg.scenario = app.get_subcommands().front()->get_name();
    if (cfg.builtin.empty() && cfg.hoppings_file.empty() && cfg.problem_file.empty())
      cfg.builtin = "honeycomb";
    return diraclev::run_scenario(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
