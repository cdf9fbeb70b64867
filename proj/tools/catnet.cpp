#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "catnet/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"catnet: FDR-controlled feature selection with Gaussian mirrors"};
  app.require_subcommand(1);
  app.footer("Set CATNET_WORKERS to bound the worker threads.");

  std::string config, out, data, pattern;

  auto* simulate = app.add_subcommand("simulate", "write simulated datasets with truth sidecars");
  simulate->add_option("--config", config, "run config JSON")->required();
  simulate->add_option("--out", out, "output directory")->required();

  auto* select = app.add_subcommand("select", "run the configured selection on one dataset");
  select->add_option("--config", config, "run config JSON")->required();
  select->add_option("--data", data, "dataset CSV")->required();
  select->add_option("--out", out, "output directory")->required();

  auto* report = app.add_subcommand("report", "aggregate metrics files per setting");
  report->add_option("--glob", pattern, "metrics file pattern")->required();
  report->add_option("--out", out, "aggregate CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : catnet::kExitError;
  }

  if (*simulate) return catnet::cmd_simulate(config, out, std::cerr);
  if (*select) return catnet::cmd_select(config, data, out, std::cerr);
  return catnet::cmd_report(pattern, out, std::cout, std::cerr);
}
