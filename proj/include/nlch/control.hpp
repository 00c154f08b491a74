#pragma once

#include <string>
#include <vector>

#include "nlch/cost_spec.hpp"
#include "nlch/forward.hpp"
#include "nlch/sensitivity.hpp"

namespace nlch {

struct BoxConstraints {
  std::vector<Field> u_min, u_max;
  std::vector<Field> v_min, v_max;

  static BoxConstraints constant(const Grid& grid, int steps, double u_min, double u_max,
                                 double v_min, double v_max);
};

/// Throws ValidationError unless min <= max pointwise and shapes align.
void validate(const BoxConstraints& box, const Grid& grid, int steps);

double cost(const StateTrajectory& traj, const ControlPair& controls, const CostSpec& spec);

/// L2(Q_T) gradient (-h(phi_n) p_n + alpha_u u_n, r_n + beta_v v_n).
/// Throws StaleTrajectoryError if adj, traj and controls do not belong together.
ControlPair reduced_gradient(const ControlPair& controls, const StateTrajectory& traj,
                             const AdjointTrajectory& adj, const CostSpec& spec);

/// Pointwise clamp into the box.
ControlPair project_box(const ControlPair& c, const BoxConstraints& box);

/// |c - project_box(c - g)| in the discrete L2(Q_T)^2 norm.
double stationarity_residual(const ControlPair& c, const ControlPair& g, const BoxConstraints& box,
                             double dt);

struct OptimizeOptions {
  double tol = 1e-4;
  int max_iter = 200;
  double initial_step = 1.0;
  double armijo = 1e-4;
  SchemeOptions scheme;

  bool operator==(const OptimizeOptions&) const = default;
};

enum class Termination { converged, max_iterations, flat_gradient };
std::string to_string(Termination t);

struct IterationRecord {
  int iter = 0;
  double cost = 0.0;
  double residual = 0.0;
  double step = 0.0;        // accepted step that produced this iterate (0 at start)
  int line_search = 0;      // halvings before acceptance
};

struct OptimizeReport {
  std::vector<IterationRecord> iterations;
  ControlPair controls;
  StateTrajectory trajectory;
  AdjointTrajectory adjoint;
  ControlPair gradient;
  Termination termination = Termination::max_iterations;

  double final_cost() const { return iterations.back().cost; }
  double final_residual() const { return iterations.back().residual; }
};

/// Projected gradient descent c <- P(c - tau g) with Armijo backtracking
/// (sufficient decrease `armijo`, halving, next trial step = 2 * last accepted).
/// Requires chi = 0.
OptimizeReport pgd_optimize(const ControlPair& c0, const BoxConstraints& box, const CostSpec& spec,
                            const Field& phi0, const Field& sigma0, const ModelParams& params,
                            const KernelData& k, const TimeGrid& tgrid, const OptimizeOptions& opts = {});

/// Discrete L-infinity distance of the controls from
///   u = min{u_max, max{h(phi) p / alpha_u, u_min}},  v = min{v_max, max{-r / beta_v, v_min}}.
/// A component is skipped (reported as NaN) when its Tikhonov weight is zero.
struct ProjectionConsistency {
  double u_defect = 0.0;
  double v_defect = 0.0;
  bool u_checked = false;
  bool v_checked = false;
};

ProjectionConsistency projection_consistency(const ControlPair& controls, const StateTrajectory& traj,
                                             const AdjointTrajectory& adj, const CostSpec& spec,
                                             const BoxConstraints& box);

}  // namespace nlch
