#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "nlch/geometry.hpp"
#include "nlch/kernels.hpp"
#include "nlch/linalg.hpp"
#include "nlch/physics.hpp"

namespace nlch {

struct TimeGrid {
  double T = 1.0;
  int steps = 10;

  double dt() const { return T / steps; }
  bool operator==(const TimeGrid&) const = default;
};

void validate(const TimeGrid& t);

struct State {
  Field phi;
  Field sigma;
};

/// Controls piecewise constant in time: u[n], v[n] act on step n -> n+1.
struct ControlPair {
  std::vector<Field> u;
  std::vector<Field> v;

  static ControlPair zeros(const Grid& grid, int steps);
  static ControlPair constant(const Field& u, const Field& v, int steps);

  int steps() const { return static_cast<int>(u.size()); }
  ControlPair& axpy(double s, const ControlPair& x);
  bool operator==(const ControlPair&) const = default;
};

ControlPair operator+(ControlPair a, const ControlPair& b);
ControlPair operator-(ControlPair a, const ControlPair& b);
ControlPair operator*(double s, ControlPair a);
/// Discrete L2(Q_T)^2 product: sum_n dt (<u_n, u'_n> + <v_n, v'_n>).
double inner_product(const ControlPair& a, const ControlPair& b, double dt);
double norm_l2(const ControlPair& a, double dt);

struct SchemeOptions {
  LinearSolverOptions linear;
  double blowup_guard = 10.0;

  bool operator==(const SchemeOptions&) const = default;
};

/// Explicit quantities of step n evaluated at the base state; the tangent and
/// adjoint sweeps linearise around these.
struct StepCache {
  Field mu;    // chemical potential
  Field gap;   // sigma + chi (1 - phi) - mu
  Field P;     // P(phi), P'(phi)
  Field dP;
  Field h;     // h(phi), h'(phi)
  Field dh;
  Field dh_u;  // h'(phi) u_n
  Field F2;    // F''(phi)
  bool valid = false;
};

struct MonitorRow {
  int step = 0;
  double time = 0.0;
  double energy = 0.0;
  double mass_phi = 0.0;
  double mass_sigma = 0.0;
  double sup_phi = 0.0;
  double sup_sigma = 0.0;
};

struct StateTrajectory {
  TimeGrid time;
  std::vector<State> states;     // t_0 .. t_steps
  std::vector<StepCache> caches;  // one per step
  std::vector<MonitorRow> monitors;
  std::uint64_t fingerprint = 0;           // states
  std::uint64_t controls_fingerprint = 0;  // controls that produced them
};

std::uint64_t fingerprint(const ControlPair& c);

/// mu = A F'(phi) + B a phi - B J*phi - chi sigma
Field chemical_potential(const Field& phi, const Field& sigma, const ModelParams& params,
                         const KernelData& k);

/// Stabilised IMEX stepper for fixed (params, kernel, dt). Holds the two
/// time-invariant SPD operators
///   phi:   diag(1 / S) - dt * Lap,  S = A lambda_s + B a
///   sigma: I - dt * Lap
/// The stepper references `kernel`, which must outlive it.
class Stepper {
 public:
  Stepper(const ModelParams& params, const KernelData& kernel, double dt, SchemeOptions opts = {});

  struct Output {
    State next;
    StepCache cache;
  };

  Output step(const State& s, const Field& u, const Field& v) const;

  const ModelParams& params() const { return params_; }
  const KernelData& kernel() const { return *kernel_; }
  double dt() const { return dt_; }
  const ImplicitOperator& phi_operator() const { return phi_op_; }
  const ImplicitOperator& sigma_operator() const { return sigma_op_; }

 private:
  ModelParams params_;
  const KernelData* kernel_;
  double dt_;
  SchemeOptions opts_;
  ImplicitOperator phi_op_;
  ImplicitOperator sigma_op_;
};

/// One step of the scheme. The phi update solves
///   (phi' - phi)/dt = Lap[mu + S (phi' - phi)] + P(phi) gap - h(phi) u
/// through w = S (phi' - phi), then sets phi' = phi + rhs + dt Lap w so that
/// mass changes only through the reaction and control terms.
State step(const State& s, const Field& u, const Field& v, const ModelParams& params,
           const KernelData& k, double dt, const SchemeOptions& opts = {});

StateTrajectory simulate(const Field& phi0, const Field& sigma0, const ControlPair& controls,
                         const ModelParams& params, const KernelData& k, const TimeGrid& tgrid,
                         const SchemeOptions& opts = {});

/// Ginzburg-Landau energy; the double integral uses
/// sum_ij J_ij (phi_i - phi_j)^2 vol^2 = 2 <a phi, phi> - 2 <J*phi, phi>.
double free_energy(const State& s, const ModelParams& params, const KernelData& k);

/// Largest normalised defect over steps of the integrated phi equation
/// d/dt mass(phi) = mass(P gap - h u).
double mass_balance_residual(const StateTrajectory& traj, const ControlPair& controls,
                             const ModelParams& params);

}  // namespace nlch
