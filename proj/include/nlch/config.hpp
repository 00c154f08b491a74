#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nlch/control.hpp"
#include "nlch/errors.hpp"
#include "nlch/forward.hpp"
#include "nlch/kernels.hpp"
#include "nlch/physics.hpp"

namespace nlch {

/// All problems found while loading or validating a configuration.
struct ConfigError : ValidationError {
  explicit ConfigError(std::vector<std::string> problems);
  std::vector<std::string> problems;
};

struct GridConfig {
  int dim = 1;
  std::array<int, 2> cells{64, 1};
  std::array<double, 2> extent{1.0, 1.0};

  Grid make() const;
  bool operator==(const GridConfig&) const = default;
};

struct Bump {
  std::array<double, 2> center{0.5, 0.5};
  double amplitude = 1.0;
  double width = 0.1;

  bool operator==(const Bump&) const = default;
};

/// Spatial field generator: constant, background plus Gaussian bumps, or a
/// snapshot file (path relative to the config file).
struct FieldSpec {
  enum class Kind { constant, bumps, file };
  Kind kind = Kind::constant;
  double value = 0.0;  // constant value, or background for bumps
  std::vector<Bump> bumps;
  std::string path;

  static FieldSpec constant(double v) { return FieldSpec{Kind::constant, v, {}, {}}; }
  Field materialize(const Grid& grid, const std::filesystem::path& base_dir) const;
  bool operator==(const FieldSpec&) const = default;
};

struct TargetConfig {
  enum class Kind { fields, manufactured };
  Kind kind = Kind::fields;
  // fields: time-constant targets
  FieldSpec phi_Omega, sigma_Omega, phi_Q, sigma_Q;
  // manufactured: targets are the trajectory generated by these controls
  FieldSpec u, v;

  bool operator==(const TargetConfig&) const = default;
};

struct CostConfig {
  double alpha_Omega = 1.0;
  double alpha_Q = 0.0;
  double beta_Omega = 0.0;
  double beta_Q = 0.0;
  double alpha_u = 1e-2;
  double beta_v = 1e-2;
  TargetConfig targets;

  bool operator==(const CostConfig&) const = default;
};

struct BoxConfig {
  FieldSpec u_min = FieldSpec::constant(-1.0), u_max = FieldSpec::constant(1.0);
  FieldSpec v_min = FieldSpec::constant(-1.0), v_max = FieldSpec::constant(1.0);

  bool operator==(const BoxConfig&) const = default;
};

struct GradcheckConfig {
  int probes = 20;
  int directions = 5;
  double duality_tol = 1e-10;
  double fd_tol = 1e-5;
  double taylor_order_min = 1.9;

  bool operator==(const GradcheckConfig&) const = default;
};

struct OutputConfig {
  std::string dir = "out";
  int snapshot_stride = 10;

  bool operator==(const OutputConfig&) const = default;
};

struct RunConfig {
  GridConfig grid;
  KernelSpec kernel{KernelFamily::gaussian, 4.0, 0.1};
  ConvolutionMethod convolution = ConvolutionMethod::automatic;
  ModelParams model;
  TimeGrid time{1.0, 40};
  FieldSpec phi0 = FieldSpec::constant(0.0);
  FieldSpec sigma0 = FieldSpec::constant(1.0);
  FieldSpec u0 = FieldSpec::constant(0.0);
  FieldSpec v0 = FieldSpec::constant(0.0);
  CostConfig cost;
  BoxConfig box;
  SchemeOptions scheme;
  OptimizeOptions optimizer;
  GradcheckConfig gradcheck;
  OutputConfig output;
  std::uint64_t seed = 1;
  /// Directory that relative file paths resolve against; not serialised.
  std::filesystem::path base_dir;

  bool operator==(const RunConfig& o) const;
};

/// Parses and fully validates a JSON configuration. Unknown keys, type
/// errors and hypothesis violations are all collected into one ConfigError.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");

/// JSON text that parse_config maps back to an equal RunConfig.
std::string write_config(const RunConfig& config);

/// FNV-1a hash of write_config(config), as 16 hex digits.
std::string config_hash(const RunConfig& config);

/// Materialised problem data for a configuration.
struct Problem {
  Grid grid;
  KernelData kernel;
  ModelParams params;
  TimeGrid time;
  Field phi0, sigma0;
  ControlPair c0;
  CostSpec cost;
  BoxConstraints box;
  SchemeOptions scheme;
  double ellipticity_margin = 0.0;
};

/// Throws ConfigError (validation), StepError (manufactured target solve).
Problem build_problem(const RunConfig& config);

}  // namespace nlch
