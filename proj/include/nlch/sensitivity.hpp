#pragma once

#include <cstdint>
#include <vector>

#include "nlch/cost_spec.hpp"
#include "nlch/forward.hpp"

namespace nlch {

/// Perturbation (xi, rho) of (phi, sigma); eta is formed per step.
struct TangentState {
  Field xi;
  Field rho;
};

/// Derivative of Stepper::step at the cached base step, applied to
/// (tangent, dh, dk). Throws StaleTrajectoryError if the cache is missing.
TangentState tangent_step(const TangentState& tan, const StepCache& base, const Field& dh,
                          const Field& dk, const Stepper& stepper);

/// Accumulated tangent along the whole trajectory, xi(0) = rho(0) = 0.
std::vector<TangentState> tangent_sweep(const StateTrajectory& traj, const ControlPair& direction,
                                        const Stepper& stepper);

/// Linear functional on trajectories, in L2 representation:
///   <phi_T, phi_N> + <sigma_T, sigma_N> + sum_{n<N} dt (<phi_run_n, phi_n> + <sigma_run_n, sigma_n>)
struct Cotangent {
  Field phi_T;
  Field sigma_T;
  std::vector<Field> phi_run;
  std::vector<Field> sigma_run;

  static Cotangent zeros(const Grid& grid, int steps);
  /// Seed whose functional measures the tracking terms of `cost` at `traj`.
  static Cotangent from_cost(const StateTrajectory& traj, const CostSpec& cost);
};

double apply(const Cotangent& c, const std::vector<TangentState>& tangent, double dt);

/// Discrete adjoint. For n < steps, p[n] and r[n] are the cotangents of the
/// phi and sigma right-hand sides of step n (per unit cell volume), so the
/// L2 gradient of the seeded functional is (-h(phi_n) p[n], r[n]).
/// p[steps], r[steps] hold the terminal seeds.
struct AdjointTrajectory {
  std::vector<Field> p;
  std::vector<Field> r;
  std::uint64_t trajectory_fingerprint = 0;
};

/// Reverse sweep of the exact transpose of tangent_sweep.
AdjointTrajectory vjp_sweep(const StateTrajectory& traj, const Cotangent& seed, const Stepper& stepper);

/// Adjoint of the tracking cost. Requires chi = 0.
AdjointTrajectory adjoint_sweep(const StateTrajectory& traj, const CostSpec& cost,
                                const Stepper& stepper);
AdjointTrajectory adjoint_sweep(const StateTrajectory& traj, const CostSpec& cost,
                                const ModelParams& params, const KernelData& k,
                                const SchemeOptions& opts = {});

/// q_n = -Lap p_n + P(phi_n) (p_n - r_n), the algebraic adjoint of mu.
Field adjoint_q(const AdjointTrajectory& adj, const StateTrajectory& traj, int n);

/// Control-space gradient of a seeded functional, without Tikhonov terms.
ControlPair adjoint_gradient(const AdjointTrajectory& adj, const StateTrajectory& traj);

/// |<VJP(seed), dir> - seed(JVP(dir))| normalised by |VJP(seed)| |dir|
/// (0 when either vanishes).
double duality_gap(const StateTrajectory& traj, const Stepper& stepper, const ControlPair& direction,
                   const Cotangent& seed);

}  // namespace nlch
