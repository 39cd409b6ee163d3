// Command-line front end: single runs, refinement-ladder sweeps, and named
// presets, all writing the artifact layout produced by run_experiment.

#include "lagdiff/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <string>

namespace {

void print_outcome(const lagdiff::ExperimentSummary& s, const std::string& out_dir) {
  std::printf("wrote %s: %d steps to t = %.17g\n", out_dir.c_str(), s.steps_taken,
              s.final_time);
  if (s.l2_error) std::printf("  l2_error        = %.17g\n", *s.l2_error);
  if (s.linf_error) std::printf("  linf_error      = %.17g\n", *s.linf_error);
  if (s.origin_error) std::printf("  origin_error    = %.17g\n", *s.origin_error);
  if (s.interface_error) std::printf("  interface_error = %.17g\n", *s.interface_error);
  if (s.waiting_time) std::printf("  waiting_time    = %.17g\n", *s.waiting_time);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lagrangian solver for generalized diffusion problems"};
  app.require_subcommand(1);

  std::string config_path, ladder_path, preset_name, out_dir;
  bool seedless = false;  // reserved: nothing here is randomized
  app.add_flag("--seedless", seedless, "reserved; all computations are already deterministic");

  CLI::App* cmd_run = app.add_subcommand("run", "run a single experiment from a config file");
  cmd_run->add_option("--config", config_path, "experiment configuration (key = value lines)")
      ->required();
  cmd_run->add_option("--out", out_dir, "output directory (overrides the config's 'out')");

  CLI::App* cmd_sweep = app.add_subcommand("sweep", "run a refinement ladder");
  cmd_sweep->add_option("--config", config_path, "base configuration")->required();
  cmd_sweep->add_option("--ladder", ladder_path, "ladder file: N tau [mesh-spec] per row")
      ->required();
  cmd_sweep->add_option("--out", out_dir, "output directory (overrides the config's 'out')");

  CLI::App* cmd_preset = app.add_subcommand("preset", "run a named bundled experiment");
  cmd_preset->add_option("name", preset_name, "preset name")->required();
  cmd_preset->add_option("--out", out_dir, "output directory (default: the preset name)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_run->parsed()) {
      lagdiff::ExperimentConfig cfg = lagdiff::parse_config_file(config_path);
      if (!out_dir.empty()) cfg.out = out_dir;
      const lagdiff::ExperimentSummary s = lagdiff::run_experiment(cfg);
      print_outcome(s, cfg.out);
      if (!s.completed) {
        std::fprintf(stderr, "error: %s\n", s.error.c_str());
        return 1;
      }
    } else if (cmd_sweep->parsed()) {
      lagdiff::ExperimentConfig cfg = lagdiff::parse_config_file(config_path);
      if (!out_dir.empty()) cfg.out = out_dir;
      const auto ladder = lagdiff::parse_ladder_file(ladder_path);
      const lagdiff::SweepResult sweep = lagdiff::run_sweep(cfg, ladder);
      std::printf("wrote %s/convergence.csv (%zu rows)\n", cfg.out.c_str(),
                  sweep.rows.size());
    } else {
      const std::string dir = out_dir.empty() ? preset_name : out_dir;
      const lagdiff::ExperimentSummary s = lagdiff::run_preset(preset_name, dir);
      print_outcome(s, dir);
      if (!s.completed) {
        std::fprintf(stderr, "error: %s\n", s.error.c_str());
        return 1;
      }
    }
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }
  return 0;
}
