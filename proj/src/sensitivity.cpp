#include "nlch/sensitivity.hpp"

#include <cmath>

#include "nlch/errors.hpp"

namespace nlch {

namespace {

void require_cache(const StepCache& c) {
  if (!c.valid) throw StaleTrajectoryError("step cache missing; re-run simulate before differentiating");
}

void require_complete(const StateTrajectory& traj) {
  if (traj.states.size() != static_cast<std::size_t>(traj.time.steps) + 1 ||
      traj.caches.size() != static_cast<std::size_t>(traj.time.steps))
    throw StaleTrajectoryError("trajectory is incomplete");
  for (const auto& c : traj.caches) require_cache(c);
}

}  // namespace

TangentState tangent_step(const TangentState& tan, const StepCache& c, const Field& dh,
                          const Field& dk, const Stepper& stepper) {
  require_cache(c);
  const ModelParams& p = stepper.params();
  const KernelData& k = stepper.kernel();
  const double dt = stepper.dt();
  const Grid& g = k.grid;
  const Field& xi = tan.xi;
  const Field& rho = tan.rho;

  // eta = A F''(phi) xi + B a xi - B J*xi - chi rho
  const Field conv = convolve(k, xi);
  Field eta(g);
  for (std::size_t i = 0; i < g.size(); ++i)
    eta[i] = p.A * c.F2[i] * xi[i] + p.B * k.a_field[i] * xi[i] - p.B * conv[i] - p.chi * rho[i];

  Field dreact(g);  // d(P gap)
  Field drhs = laplacian_neumann(eta);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double dgap = rho[i] - p.chi * xi[i] - eta[i];
    dreact[i] = c.dP[i] * c.gap[i] * xi[i] + c.P[i] * dgap;
    drhs[i] = dt * (drhs[i] + dreact[i] - c.dh_u[i] * xi[i] - c.h[i] * dh[i]);
  }
  const Field dw = stepper.phi_operator().solve(drhs);
  const Field lap_dw = laplacian_neumann(dw);
  TangentState next{Field(g), Field(g)};
  for (std::size_t i = 0; i < g.size(); ++i) next.xi[i] = xi[i] + drhs[i] + dt * lap_dw[i];

  const Field lap_xi = p.chi != 0.0 ? laplacian_neumann(next.xi) : Field(g);
  Field drhs_sigma(g);
  for (std::size_t i = 0; i < g.size(); ++i)
    drhs_sigma[i] = rho[i] - dt * p.chi * lap_xi[i] - dt * dreact[i] + dt * dk[i];
  next.rho = stepper.sigma_operator().solve(drhs_sigma);
  return next;
}

std::vector<TangentState> tangent_sweep(const StateTrajectory& traj, const ControlPair& direction,
                                        const Stepper& stepper) {
  require_complete(traj);
  if (direction.steps() != traj.time.steps) throw ShapeError("direction has the wrong number of steps");
  const Grid& g = stepper.kernel().grid;
  std::vector<TangentState> out;
  out.reserve(traj.states.size());
  out.push_back({Field(g), Field(g)});
  for (std::size_t n = 0; n < traj.caches.size(); ++n)
    out.push_back(tangent_step(out.back(), traj.caches[n], direction.u[n], direction.v[n], stepper));
  return out;
}

Cotangent Cotangent::zeros(const Grid& grid, int steps) {
  Cotangent c;
  c.phi_T = Field(grid);
  c.sigma_T = Field(grid);
  c.phi_run.assign(static_cast<std::size_t>(steps), Field(grid));
  c.sigma_run.assign(static_cast<std::size_t>(steps), Field(grid));
  return c;
}

Cotangent Cotangent::from_cost(const StateTrajectory& traj, const CostSpec& cost) {
  const int steps = traj.time.steps;
  const State& last = traj.states.back();
  validate(cost, last.phi.grid(), steps, false);
  Cotangent c;
  c.phi_T = cost.alpha_Omega * (last.phi - cost.phi_Omega);
  c.sigma_T = cost.beta_Omega * (last.sigma - cost.sigma_Omega);
  for (int n = 0; n < steps; ++n) {
    const auto un = static_cast<std::size_t>(n);
    c.phi_run.push_back(cost.alpha_Q * (traj.states[un].phi - cost.phi_Q[un]));
    c.sigma_run.push_back(cost.beta_Q * (traj.states[un].sigma - cost.sigma_Q[un]));
  }
  return c;
}

double apply(const Cotangent& c, const std::vector<TangentState>& tangent, double dt) {
  const TangentState& last = tangent.back();
  double s = inner_product(c.phi_T, last.xi) + inner_product(c.sigma_T, last.rho);
  for (std::size_t n = 0; n + 1 < tangent.size(); ++n)
    s += dt * (inner_product(c.phi_run[n], tangent[n].xi) + inner_product(c.sigma_run[n], tangent[n].rho));
  return s;
}

AdjointTrajectory vjp_sweep(const StateTrajectory& traj, const Cotangent& seed, const Stepper& stepper) {
  require_complete(traj);
  const ModelParams& pr = stepper.params();
  const KernelData& k = stepper.kernel();
  const double dt = stepper.dt();
  const Grid& g = k.grid;
  const auto steps = static_cast<std::size_t>(traj.time.steps);
  if (seed.phi_run.size() != steps || seed.sigma_run.size() != steps)
    throw ShapeError("cotangent seed has the wrong number of steps");

  AdjointTrajectory adj;
  adj.p.assign(steps + 1, Field(g));
  adj.r.assign(steps + 1, Field(g));
  adj.p[steps] = seed.phi_T;
  adj.r[steps] = seed.sigma_T;
  adj.trajectory_fingerprint = traj.fingerprint;

  // Cotangents of (phi_{n+1}, sigma_{n+1}), per unit cell volume.
  Field bar_phi = seed.phi_T;
  Field bar_sigma = seed.sigma_T;
  for (std::size_t m = steps; m-- > 0;) {
    const StepCache& c = traj.caches[m];

    Field r = stepper.sigma_operator().solve(bar_sigma);
    if (pr.chi != 0.0) bar_phi.axpy(-dt * pr.chi, laplacian_neumann(r));

    // phi' = phi + rhs + dt Lap M^{-1} rhs, with Lap and M symmetric.
    Field lap_bar = laplacian_neumann(bar_phi);
    lap_bar *= dt;
    Field p = bar_phi + stepper.phi_operator().solve(lap_bar);

    Field bar_mu = laplacian_neumann(p);
    bar_mu *= dt;
    Field next_phi = bar_phi;
    Field next_sigma = r;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double bar_react = dt * (p[i] - r[i]);  // cotangent of P(phi) gap
      const double bar_gap = c.P[i] * bar_react;
      next_phi[i] += c.dP[i] * c.gap[i] * bar_react - c.dh_u[i] * dt * p[i] - pr.chi * bar_gap;
      next_sigma[i] += bar_gap;
      bar_mu[i] -= bar_gap;
    }
    const Field conv = convolve(k, bar_mu);
    for (std::size_t i = 0; i < g.size(); ++i) {
      next_phi[i] += pr.A * c.F2[i] * bar_mu[i] + pr.B * k.a_field[i] * bar_mu[i] - pr.B * conv[i] +
                     dt * seed.phi_run[m][i];
      next_sigma[i] += -pr.chi * bar_mu[i] + dt * seed.sigma_run[m][i];
    }

    adj.p[m] = std::move(p);
    adj.r[m] = std::move(r);
    bar_phi = std::move(next_phi);
    bar_sigma = std::move(next_sigma);
  }
  return adj;
}

AdjointTrajectory adjoint_sweep(const StateTrajectory& traj, const CostSpec& cost, const Stepper& stepper) {
  if (stepper.params().chi != 0.0)
    throw OutOfScopeError(
        "the adjoint and optimal control are only available in the chemotaxis-free case (chi = 0)");
  return vjp_sweep(traj, Cotangent::from_cost(traj, cost), stepper);
}

AdjointTrajectory adjoint_sweep(const StateTrajectory& traj, const CostSpec& cost,
                                const ModelParams& params, const KernelData& k,
                                const SchemeOptions& opts) {
  if (params.chi != 0.0)
    throw OutOfScopeError(
        "the adjoint and optimal control are only available in the chemotaxis-free case (chi = 0)");
  if (traj.time.steps == 0) {
    // No steps: only the terminal data exist.
    AdjointTrajectory adj;
    const auto seed = Cotangent::from_cost(traj, cost);
    adj.p = {seed.phi_T};
    adj.r = {seed.sigma_T};
    adj.trajectory_fingerprint = traj.fingerprint;
    return adj;
  }
  const Stepper stepper(params, k, traj.time.dt(), opts);
  return adjoint_sweep(traj, cost, stepper);
}

Field adjoint_q(const AdjointTrajectory& adj, const StateTrajectory& traj, int n) {
  if (n < 0 || n >= traj.time.steps) throw ShapeError("adjoint_q: step index out of range");
  const auto un = static_cast<std::size_t>(n);
  const StepCache& c = traj.caches[un];
  require_cache(c);
  Field q = laplacian_neumann(adj.p[un]);
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = -q[i] + c.P[i] * (adj.p[un][i] - adj.r[un][i]);
  return q;
}

ControlPair adjoint_gradient(const AdjointTrajectory& adj, const StateTrajectory& traj) {
  if (adj.trajectory_fingerprint != traj.fingerprint)
    throw StaleTrajectoryError("adjoint was computed from a different trajectory");
  require_complete(traj);
  ControlPair g;
  for (std::size_t n = 0; n < traj.caches.size(); ++n) {
    Field gu = hadamard(traj.caches[n].h, adj.p[n]);
    gu *= -1.0;
    g.u.push_back(std::move(gu));
    g.v.push_back(adj.r[n]);
  }
  return g;
}

double duality_gap(const StateTrajectory& traj, const Stepper& stepper, const ControlPair& direction,
                   const Cotangent& seed) {
  const double dt = stepper.dt();
  const double forward = apply(seed, tangent_sweep(traj, direction, stepper), dt);
  const ControlPair grad = adjoint_gradient(vjp_sweep(traj, seed, stepper), traj);
  const double reverse = inner_product(grad, direction, dt);
  const double scale = norm_l2(grad, dt) * norm_l2(direction, dt);
  if (scale == 0.0) return std::abs(forward - reverse);
  return std::abs(forward - reverse) / scale;
}

}  // namespace nlch
