#include "nlch/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nlch/errors.hpp"

namespace nlch {

namespace {

void check_slices(const std::vector<Field>& slices, const Grid& grid, int steps, const char* what) {
  if (slices.size() != static_cast<std::size_t>(steps))
    throw ValidationError(std::string(what) + " has " + std::to_string(slices.size()) +
                          " time slices, expected " + std::to_string(steps));
  for (const auto& f : slices) {
    if (!(f.grid() == grid)) throw ValidationError(std::string(what) + " grid mismatch");
    if (!f.all_finite()) throw ValidationError(std::string(what) + " must be finite");
  }
}

double sq_dist(const Field& a, const Field& b) {
  const Field d = a - b;
  return inner_product(d, d);
}

}  // namespace

CostSpec CostSpec::scaled(double s) const {
  CostSpec out = *this;
  out.alpha_Omega *= s;
  out.alpha_Q *= s;
  out.beta_Omega *= s;
  out.beta_Q *= s;
  out.alpha_u *= s;
  out.beta_v *= s;
  return out;
}

void validate(const CostSpec& spec, const Grid& grid, int steps, bool require_nonzero) {
  for (double w : {spec.alpha_Omega, spec.alpha_Q, spec.beta_Omega, spec.beta_Q, spec.alpha_u, spec.beta_v})
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("cost weights must be finite and >= 0");
  if (require_nonzero && spec.all_weights_zero())
    throw ValidationError("cost weights must not all be zero");
  check_slices({spec.phi_Omega}, grid, 1, "phi_Omega");
  check_slices({spec.sigma_Omega}, grid, 1, "sigma_Omega");
  check_slices(spec.phi_Q, grid, steps, "phi_Q");
  check_slices(spec.sigma_Q, grid, steps, "sigma_Q");
}

CostSpec zero_cost(const Grid& grid, int steps) {
  CostSpec c;
  c.phi_Omega = Field(grid);
  c.sigma_Omega = Field(grid);
  c.phi_Q.assign(static_cast<std::size_t>(steps), Field(grid));
  c.sigma_Q.assign(static_cast<std::size_t>(steps), Field(grid));
  return c;
}

BoxConstraints BoxConstraints::constant(const Grid& grid, int steps, double u_min, double u_max,
                                        double v_min, double v_max) {
  const auto n = static_cast<std::size_t>(steps);
  BoxConstraints b;
  b.u_min.assign(n, Field(grid, u_min));
  b.u_max.assign(n, Field(grid, u_max));
  b.v_min.assign(n, Field(grid, v_min));
  b.v_max.assign(n, Field(grid, v_max));
  return b;
}

void validate(const BoxConstraints& box, const Grid& grid, int steps) {
  check_slices(box.u_min, grid, steps, "u_min");
  check_slices(box.u_max, grid, steps, "u_max");
  check_slices(box.v_min, grid, steps, "v_min");
  check_slices(box.v_max, grid, steps, "v_max");
  for (std::size_t n = 0; n < box.u_min.size(); ++n)
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (box.u_min[n][i] > box.u_max[n][i])
        throw ValidationError("box constraint violated: u_min > u_max at step " + std::to_string(n) +
                              ", cell " + std::to_string(i));
      if (box.v_min[n][i] > box.v_max[n][i])
        throw ValidationError("box constraint violated: v_min > v_max at step " + std::to_string(n) +
                              ", cell " + std::to_string(i));
    }
}

double cost(const StateTrajectory& traj, const ControlPair& controls, const CostSpec& spec) {
  const int steps = traj.time.steps;
  const Grid& grid = traj.states.front().phi.grid();
  validate(spec, grid, steps, false);
  if (controls.steps() != steps || controls.v.size() != controls.u.size())
    throw ShapeError("controls are not aligned with the trajectory");
  const double dt = traj.time.dt();
  const State& last = traj.states.back();
  double running = 0.0;
  for (int n = 0; n < steps; ++n) {
    const auto un = static_cast<std::size_t>(n);
    const State& s = traj.states[un];
    double term = 0.0;
    if (spec.alpha_Q != 0.0) term += spec.alpha_Q * sq_dist(s.phi, spec.phi_Q[un]);
    if (spec.beta_Q != 0.0) term += spec.beta_Q * sq_dist(s.sigma, spec.sigma_Q[un]);
    if (spec.alpha_u != 0.0) term += spec.alpha_u * inner_product(controls.u[un], controls.u[un]);
    if (spec.beta_v != 0.0) term += spec.beta_v * inner_product(controls.v[un], controls.v[un]);
    running += dt * term;
  }
  double terminal = 0.0;
  if (spec.alpha_Omega != 0.0) terminal += spec.alpha_Omega * sq_dist(last.phi, spec.phi_Omega);
  if (spec.beta_Omega != 0.0) terminal += spec.beta_Omega * sq_dist(last.sigma, spec.sigma_Omega);
  return 0.5 * (terminal + running);
}

ControlPair reduced_gradient(const ControlPair& controls, const StateTrajectory& traj,
                             const AdjointTrajectory& adj, const CostSpec& spec) {
  if (fingerprint(controls) != traj.controls_fingerprint)
    throw StaleTrajectoryError("trajectory was computed for different controls");
  ControlPair g = adjoint_gradient(adj, traj);
  for (std::size_t n = 0; n < g.u.size(); ++n) {
    g.u[n].axpy(spec.alpha_u, controls.u[n]);
    g.v[n].axpy(spec.beta_v, controls.v[n]);
  }
  return g;
}

ControlPair project_box(const ControlPair& c, const BoxConstraints& box) {
  if (c.u.size() != box.u_min.size() || c.v.size() != box.v_min.size())
    throw ShapeError("controls and box have different numbers of steps");
  ControlPair out = c;
  for (std::size_t n = 0; n < c.u.size(); ++n) {
    for (std::size_t i = 0; i < c.u[n].size(); ++i) {
      out.u[n][i] = std::min(box.u_max[n][i], std::max(c.u[n][i], box.u_min[n][i]));
      out.v[n][i] = std::min(box.v_max[n][i], std::max(c.v[n][i], box.v_min[n][i]));
    }
  }
  return out;
}

double stationarity_residual(const ControlPair& c, const ControlPair& g, const BoxConstraints& box,
                             double dt) {
  ControlPair trial = c;
  trial.axpy(-1.0, g);
  return norm_l2(c - project_box(trial, box), dt);
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::flat_gradient: return "flat_gradient";
    default: return "max_iterations";
  }
}

OptimizeReport pgd_optimize(const ControlPair& c0, const BoxConstraints& box, const CostSpec& spec,
                            const Field& phi0, const Field& sigma0, const ModelParams& params,
                            const KernelData& k, const TimeGrid& tgrid, const OptimizeOptions& opts) {
  if (params.chi != 0.0)
    throw OutOfScopeError("optimal control is only available in the chemotaxis-free case (chi = 0)");
  validate(tgrid);
  if (tgrid.steps < 1) throw ValidationError("optimisation needs at least one time step");
  validate(box, k.grid, tgrid.steps);
  validate(spec, k.grid, tgrid.steps, false);
  const double dt = tgrid.dt();
  const Stepper stepper(params, k, dt, opts.scheme);

  OptimizeReport rep;
  rep.controls = project_box(c0, box);
  rep.trajectory = simulate(phi0, sigma0, rep.controls, params, k, tgrid, opts.scheme);
  double f = cost(rep.trajectory, rep.controls, spec);
  rep.adjoint = adjoint_sweep(rep.trajectory, spec, stepper);
  rep.gradient = reduced_gradient(rep.controls, rep.trajectory, rep.adjoint, spec);

  double tau = opts.initial_step;
  double accepted_step = 0.0;
  int line_search = 0;
  for (int it = 0;; ++it) {
    const double res = stationarity_residual(rep.controls, rep.gradient, box, dt);
    rep.iterations.push_back({it, f, res, accepted_step, line_search});
    if (res <= opts.tol) {
      rep.termination = Termination::converged;
      break;
    }
    if (it >= opts.max_iter) {
      rep.termination = Termination::max_iterations;
      break;
    }

    bool accepted = false;
    line_search = 0;
    while (tau >= 1e-14 * opts.initial_step) {
      ControlPair trial = rep.controls;
      trial.axpy(-tau, rep.gradient);
      trial = project_box(trial, box);
      const double predicted = inner_product(rep.gradient, trial - rep.controls, dt);
      try {
        StateTrajectory traj = simulate(phi0, sigma0, trial, params, k, tgrid, opts.scheme);
        const double ft = cost(traj, trial, spec);
        if (ft < f && ft <= f + opts.armijo * predicted) {
          rep.controls = std::move(trial);
          rep.trajectory = std::move(traj);
          f = ft;
          accepted = true;
          break;
        }
      } catch (const StepError& e) {
        if (!e.instability) throw;
      }
      tau *= 0.5;
      ++line_search;
    }
    if (!accepted) {
      rep.termination = Termination::flat_gradient;
      break;
    }
    accepted_step = tau;
    rep.adjoint = adjoint_sweep(rep.trajectory, spec, stepper);
    rep.gradient = reduced_gradient(rep.controls, rep.trajectory, rep.adjoint, spec);
    tau *= 2.0;
  }
  return rep;
}

ProjectionConsistency projection_consistency(const ControlPair& controls, const StateTrajectory& traj,
                                             const AdjointTrajectory& adj, const CostSpec& spec,
                                             const BoxConstraints& box) {
  if (adj.trajectory_fingerprint != traj.fingerprint)
    throw StaleTrajectoryError("adjoint was computed from a different trajectory");
  ProjectionConsistency pc;
  pc.u_checked = spec.alpha_u > 0.0;
  pc.v_checked = spec.beta_v > 0.0;
  pc.u_defect = pc.u_checked ? 0.0 : std::numeric_limits<double>::quiet_NaN();
  pc.v_defect = pc.v_checked ? 0.0 : std::numeric_limits<double>::quiet_NaN();
  for (std::size_t n = 0; n < traj.caches.size(); ++n) {
    const StepCache& c = traj.caches[n];
    for (std::size_t i = 0; i < controls.u[n].size(); ++i) {
      if (pc.u_checked) {
        const double target = std::min(box.u_max[n][i],
                                       std::max(c.h[i] * adj.p[n][i] / spec.alpha_u, box.u_min[n][i]));
        pc.u_defect = std::max(pc.u_defect, std::abs(controls.u[n][i] - target));
      }
      if (pc.v_checked) {
        const double target =
            std::min(box.v_max[n][i], std::max(-adj.r[n][i] / spec.beta_v, box.v_min[n][i]));
        pc.v_defect = std::max(pc.v_defect, std::abs(controls.v[n][i] - target));
      }
    }
  }
  return pc;
}

}  // namespace nlch
