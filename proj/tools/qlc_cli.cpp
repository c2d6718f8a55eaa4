// qlc: batch runner for local-control experiments on the Ising chain.
//
//   qlc run --config experiments/gamma_table.json [--jobs N] [--out DIR]

#include <CLI11.hpp>
#include <iostream>

#include "qlc/run_config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Local-coupling control runs for a transverse-field Ising ring"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  int jobs = 1;
  auto* run = app.add_subcommand("run", "Execute one config file");
  run->add_option("--config", config_path, "JSON run configuration")->required();
  run->add_option("--jobs", jobs, "Worker threads for sweeps and scans")
      ->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : qlc::kExitConfig;
  }

  const auto outcome = qlc::run_from_file(config_path, out_dir, jobs, std::cerr);
  for (const auto& p : outcome.outputs) std::cout << p.string() << '\n';
  return outcome.exit_code;
}
