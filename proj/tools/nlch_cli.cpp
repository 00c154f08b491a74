#include <string>
#include <utility>

#include "CLI11.hpp"
#include "nlch/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Non-local Cahn-Hilliard tumour model: simulation, gradient checks and optimal control"};
  app.require_subcommand(1);

  nlch::CommandOptions opts;
  std::string out;
  std::uint64_t seed = 0;

  const std::pair<const char*, const char*> commands[] = {
      {"simulate", "run the forward model and write monitors and snapshots"},
      {"optimize", "projected gradient descent on the tracking cost"},
      {"gradcheck", "duality, Taylor and finite-difference checks of the adjoint gradient"},
      {"validate", "parse the config and check the model hypotheses"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opts.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory, overrides output.dir");
    sub->add_option("--seed", seed, "overrides the config seed");
    sub->add_flag("--quiet", opts.quiet, "suppress progress output");
    if (std::string(name) == "gradcheck")
      sub->add_flag("--corrupt-adjoint", opts.corrupt_adjoint)->group("");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : nlch::exit_validation;
  }

  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--out") > 0) opts.out = out;
  if (sub->count("--seed") > 0) opts.seed = seed;
  return nlch::run_command(sub->get_name(), opts);
}
