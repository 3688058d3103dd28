// Command-line front end: subgroup risk-benefit analysis pipeline.
#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "bvsa/pipeline.hpp"
#include "bvsa/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Bayesian subgroup risk-benefit analysis"};
  app.set_version_flag("--version", std::string(bvsa::kArtifactName) + " " +
                                        bvsa::kArtifactVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  bool allow_nonconverged = false;

  const std::pair<const char*, const char*> commands[] = {
      {"summarize", "Ingest data and write the summary table"},
      {"fit", "Fit the configured model and save posterior draws"},
      {"measures", "Compute subgroup risk-benefit measures"},
      {"check", "Run posterior predictive checks"},
      {"compare", "Fit candidate models and compare DIC/WAIC"},
      {"simulate", "Generate a synthetic patient-level dataset"},
  };
  for (const auto& [name, desc] : commands) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_path, "Path to a JSON run config")
        ->required();
    sub->add_option("--out-dir", out_dir,
                    "Output directory (overrides BVSA_OUTPUT_DIR and the "
                    "config's output_dir)");
    sub->add_flag("--allow-nonconverged", allow_nonconverged,
                  "Proceed despite a failed convergence gate");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    bvsa::RunConfig cfg = bvsa::load_config(config_path);
    if (const char* env = std::getenv("BVSA_OUTPUT_DIR");
        env != nullptr && *env != '\0') {
      cfg.output_dir = env;
    }
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (allow_nonconverged) cfg.allow_nonconverged = true;
    const bvsa::Command command =
        bvsa::command_from_name(app.get_subcommands().front()->get_name());
    return bvsa::run_pipeline(cfg, command, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
