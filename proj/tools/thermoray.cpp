#include <iostream>

#include <CLI11.hpp>

#include "thermoray/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Attenuated ray transforms and scattering data for thermostat flows on surfaces"};
  app.set_version_flag("--version", THERMORAY_VERSION);
  app.require_subcommand(1);

  thermoray::RunOptions opt;
  std::uint64_t seed = 0;
  for (const auto& name : thermoray::command_names()) {
    CLI::App* sub = app.add_subcommand(name, "Run the " + name + " experiment");
    sub->add_option("--config", opt.config_path, "JSON experiment config")->required();
    sub->add_option("--out", opt.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--threads", opt.threads, "Worker threads")->capture_default_str();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : thermoray::kExitConfig;
  }
  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--seed") > 0) opt.seed = seed;
  return thermoray::run(sub->get_name(), opt, std::cerr);
}
