#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "kryloc/config.hpp"
#include "kryloc/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Krylov localization diagnostics"};
  std::string config, preset, output;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  auto* o_config = app.add_option("--config", config, "JSON run configuration");
  auto* o_preset = app.add_option("--preset", preset, "built-in configuration (fig2, fig3, fig4, fig6, fig7)");
  auto* o_output = app.add_option("--output", output, "output directory (overrides the config)");
  auto* o_seed = app.add_option("--seed", seed, "random seed (overrides the config)");
  auto* o_workers = app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  bool print_preset = false;
  app.add_flag("--print-preset", print_preset, "print the preset JSON and exit");
  o_config->excludes(o_preset);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kryloc::exit_config;
  }

  if (print_preset) {
    try {
      std::cout << kryloc::preset_json(preset).dump(2) << "\n";
      return 0;
    } catch (const std::exception& e) {
      std::cerr << "kryloc: " << e.what() << "\n";
      return kryloc::exit_config;
    }
  }

  kryloc::RunOptions opts;
  if (*o_config) opts.config_path = config;
  if (*o_preset) opts.preset = preset;
  if (*o_output) opts.output_dir = output;
  if (*o_seed) opts.seed = seed;
  if (*o_workers) opts.workers = workers;
  return kryloc::run(opts);
}
