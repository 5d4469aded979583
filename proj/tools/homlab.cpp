#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "homlab/config.hpp"
#include "homlab/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"homlab: cell-problem homogenization laboratory"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::uint64_t seed = 0;
  int workers = 0;
  std::string out_dir;
  for (const char* name : {"field-stats", "solve-cell", "estimate-fhom", "verify-bounds", "subadditivity",
                           "stationarity", "recession", "rank-one", "degenerate-divergence",
                           "degenerate-interface", "glue-check"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the master seed");
    sub->add_option("--workers", workers, "worker threads (default: config, then HOMLAB_WORKERS, then 1)")
        ->check(CLI::Range(1, 1024));
    sub->add_option("--out", out_dir, "output directory");
  }
  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();
  const CLI::App* sub = app.get_subcommands().front();

  homlab::RunConfig cfg;
  try {
    cfg = homlab::parse_config_file(config_path);
  } catch (const homlab::ConfigErrors& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
  if (homlab::to_string(cfg.command) != command) {
    std::cerr << "config command \"" << homlab::to_string(cfg.command) << "\" does not match \"" << command
              << "\"\n";
    return 2;
  }
  if (sub->count("--seed")) cfg.seed = seed;
  if (sub->count("--workers")) cfg.workers = workers;
  if (sub->count("--out")) cfg.out_dir = out_dir;

  const homlab::RunOutcome out = homlab::run(cfg);
  std::printf("%s run %s: %s%s\n  %s\n  %s\n", command.c_str(), out.run_id.c_str(), out.pass ? "pass" : "FAIL",
              out.flagged ? " (flagged)" : "", out.csv.c_str(), out.summary.c_str());
  if (!out.error.empty()) std::fprintf(stderr, "error: %s\n", out.error.c_str());
  return out.exit_code;
}
