#pragma once

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace nlch {

enum ExitCode : int {
  exit_ok = 0,
  exit_infrastructure = 1,
  exit_validation = 2,
  exit_solver = 3,
  exit_check_failure = 4,
};

struct CommandOptions {
  std::filesystem::path config;
  /// Overrides output.dir from the config.
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  /// Test hook: perturbs the adjoint before the gradient checks.
  bool corrupt_adjoint = false;
  std::ostream* out_stream = &std::cout;
  std::ostream* err_stream = &std::cerr;
};

// Each command maps its own failures onto ExitCode and never throws.
int cmd_validate(const CommandOptions& opts);
int cmd_simulate(const CommandOptions& opts);
int cmd_gradcheck(const CommandOptions& opts);
int cmd_optimize(const CommandOptions& opts);

/// Dispatches "simulate" | "optimize" | "gradcheck" | "validate".
int run_command(const std::string& name, const CommandOptions& opts);

}  // namespace nlch
