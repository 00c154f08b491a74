#include "nlch/forward.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "nlch/errors.hpp"

namespace nlch {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv_mix(std::uint64_t& h, std::span<const double> values) {
  for (double v : values) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffu;
      h *= kFnvPrime;
    }
  }
}

std::uint64_t fingerprint(const std::vector<State>& states) {
  std::uint64_t h = kFnvOffset;
  for (const State& s : states) {
    fnv_mix(h, s.phi.values());
    fnv_mix(h, s.sigma.values());
  }
  return h;
}

Field pointwise(const Field& x, auto fn) {
  Field out(x.grid());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = fn(x[i]);
  return out;
}

Field stabilisation(const ModelParams& p, const KernelData& k) {
  Field s(k.grid);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = p.A * p.lambda_s + p.B * k.a_field[i];
    if (!(s[i] > 0.0)) throw ValidationError("stabilisation A lambda_s + B a must be positive");
  }
  return s;
}

Field inverse(Field f) {
  for (double& v : f.values()) v = 1.0 / v;
  return f;
}

MonitorRow monitor(int n, double t, const State& s, const ModelParams& p, const KernelData& k) {
  return {n, t, free_energy(s, p, k), mass(s.phi), mass(s.sigma), norm_linf(s.phi), norm_linf(s.sigma)};
}

}  // namespace

void validate(const TimeGrid& t) {
  if (!(t.T > 0.0) || !std::isfinite(t.T)) throw ValidationError("final time T must be positive");
  if (t.steps < 0) throw ValidationError("number of steps must be non-negative");
}

ControlPair ControlPair::zeros(const Grid& grid, int steps) {
  return constant(Field(grid), Field(grid), steps);
}

ControlPair ControlPair::constant(const Field& u, const Field& v, int steps) {
  ControlPair c;
  c.u.assign(static_cast<std::size_t>(steps), u);
  c.v.assign(static_cast<std::size_t>(steps), v);
  return c;
}

ControlPair& ControlPair::axpy(double s, const ControlPair& x) {
  if (x.u.size() != u.size() || x.v.size() != v.size())
    throw ShapeError("control pairs have different numbers of steps");
  for (std::size_t n = 0; n < u.size(); ++n) {
    u[n].axpy(s, x.u[n]);
    v[n].axpy(s, x.v[n]);
  }
  return *this;
}

ControlPair operator+(ControlPair a, const ControlPair& b) { return a.axpy(1.0, b); }
ControlPair operator-(ControlPair a, const ControlPair& b) { return a.axpy(-1.0, b); }

ControlPair operator*(double s, ControlPair a) {
  for (auto& f : a.u) f *= s;
  for (auto& f : a.v) f *= s;
  return a;
}

double inner_product(const ControlPair& a, const ControlPair& b, double dt) {
  if (a.u.size() != b.u.size() || a.v.size() != b.v.size())
    throw ShapeError("control pairs have different numbers of steps");
  double s = 0.0;
  for (std::size_t n = 0; n < a.u.size(); ++n)
    s += dt * (inner_product(a.u[n], b.u[n]) + inner_product(a.v[n], b.v[n]));
  return s;
}

double norm_l2(const ControlPair& a, double dt) { return std::sqrt(inner_product(a, a, dt)); }

std::uint64_t fingerprint(const ControlPair& c) {
  std::uint64_t h = kFnvOffset;
  for (const auto& f : c.u) fnv_mix(h, f.values());
  for (const auto& f : c.v) fnv_mix(h, f.values());
  return h;
}

Field chemical_potential(const Field& phi, const Field& sigma, const ModelParams& p,
                         const KernelData& k) {
  require_same_grid(phi.grid(), sigma.grid(), "chemical_potential");
  require_same_grid(phi.grid(), k.grid, "chemical_potential");
  const Field conv = convolve(k, phi);
  Field mu(phi.grid());
  for (std::size_t i = 0; i < mu.size(); ++i)
    mu[i] = p.A * F_eval(p.potential, phi[i], 1) + p.B * k.a_field[i] * phi[i] - p.B * conv[i] -
            p.chi * sigma[i];
  return mu;
}

Stepper::Stepper(const ModelParams& params, const KernelData& kernel, double dt, SchemeOptions opts)
    : params_(params),
      kernel_(&kernel),
      dt_(dt),
      opts_(opts),
      phi_op_(inverse(stabilisation(params, kernel)), dt, opts.linear),
      sigma_op_(Field(kernel.grid, 1.0), dt, opts.linear) {
  if (!(dt > 0.0)) throw ValidationError("time step must be positive");
}

Stepper::Output Stepper::step(const State& s, const Field& u, const Field& v) const {
  const ModelParams& p = params_;
  const Grid& g = kernel_->grid;
  require_same_grid(s.phi.grid(), g, "step");
  require_same_grid(s.sigma.grid(), g, "step");
  require_same_grid(u.grid(), g, "step");
  require_same_grid(v.grid(), g, "step");

  Output out;
  StepCache& c = out.cache;
  c.mu = chemical_potential(s.phi, s.sigma, p, *kernel_);
  c.gap = Field(g);
  for (std::size_t i = 0; i < g.size(); ++i)
    c.gap[i] = s.sigma[i] + p.chi * (1.0 - s.phi[i]) - c.mu[i];
  c.P = pointwise(s.phi, [&](double x) { return P_eval(p.proliferation, x, 0); });
  c.dP = pointwise(s.phi, [&](double x) { return P_eval(p.proliferation, x, 1); });
  c.h = pointwise(s.phi, [&](double x) { return h_eval(p, x, 0); });
  c.dh = pointwise(s.phi, [&](double x) { return h_eval(p, x, 1); });
  c.dh_u = hadamard(c.dh, u);
  c.F2 = pointwise(s.phi, [&](double x) { return F_eval(p.potential, x, 2); });
  c.valid = true;

  Field rhs = laplacian_neumann(c.mu);
  for (std::size_t i = 0; i < g.size(); ++i)
    rhs[i] = dt_ * (rhs[i] + c.P[i] * c.gap[i] - c.h[i] * u[i]);
  const Field w = phi_op_.solve(rhs);
  const Field lap_w = laplacian_neumann(w);
  Field phi(g);
  for (std::size_t i = 0; i < g.size(); ++i) phi[i] = s.phi[i] + rhs[i] + dt_ * lap_w[i];

  const double sup = norm_linf(phi);
  if (!phi.all_finite() || sup > opts_.blowup_guard) {
    std::ostringstream os;
    os << "phi left the blow-up guard (|phi|_inf = " << sup << " > " << opts_.blowup_guard
       << "); reduce the time step";
    throw InstabilityError(os.str(), sup);
  }

  Field rhs_sigma(g);
  const Field lap_phi = p.chi != 0.0 ? laplacian_neumann(phi) : Field(g);
  for (std::size_t i = 0; i < g.size(); ++i)
    rhs_sigma[i] = s.sigma[i] - dt_ * p.chi * lap_phi[i] - dt_ * c.P[i] * c.gap[i] + dt_ * v[i];
  Field sigma = sigma_op_.solve(rhs_sigma);
  if (!sigma.all_finite()) throw InstabilityError("sigma became non-finite; reduce the time step", 0.0);

  out.next = State{std::move(phi), std::move(sigma)};
  return out;
}

State step(const State& s, const Field& u, const Field& v, const ModelParams& params,
           const KernelData& k, double dt, const SchemeOptions& opts) {
  return Stepper(params, k, dt, opts).step(s, u, v).next;
}

StateTrajectory simulate(const Field& phi0, const Field& sigma0, const ControlPair& controls,
                         const ModelParams& params, const KernelData& k, const TimeGrid& tgrid,
                         const SchemeOptions& opts) {
  validate(tgrid);
  validate_hypotheses(params, k);
  require_same_grid(phi0.grid(), k.grid, "simulate");
  require_same_grid(sigma0.grid(), k.grid, "simulate");
  if (!phi0.all_finite() || !sigma0.all_finite())
    throw ValidationError("initial data must be finite");
  if (controls.steps() != tgrid.steps || controls.v.size() != controls.u.size())
    throw ShapeError("controls have " + std::to_string(controls.steps()) + " steps, time grid has " +
                     std::to_string(tgrid.steps));

  StateTrajectory traj;
  traj.time = tgrid;
  traj.states.reserve(static_cast<std::size_t>(tgrid.steps) + 1);
  traj.states.push_back(State{phi0, sigma0});
  traj.monitors.push_back(monitor(0, 0.0, traj.states.back(), params, k));
  if (tgrid.steps > 0) {
    const double dt = tgrid.dt();
    const Stepper stepper(params, k, dt, opts);
    for (int n = 0; n < tgrid.steps; ++n) {
      const auto un = static_cast<std::size_t>(n);
      Stepper::Output out;
      try {
        out = stepper.step(traj.states.back(), controls.u[un], controls.v[un]);
      } catch (const InstabilityError& e) {
        throw StepError("step " + std::to_string(n) + ": " + e.what(), n, true);
      } catch (const SolverError& e) {
        throw StepError("step " + std::to_string(n) + ": " + e.what(), n, false);
      }
      traj.caches.push_back(std::move(out.cache));
      traj.states.push_back(std::move(out.next));
      traj.monitors.push_back(monitor(n + 1, (n + 1) * dt, traj.states.back(), params, k));
    }
  }
  traj.fingerprint = fingerprint(traj.states);
  traj.controls_fingerprint = fingerprint(controls);
  return traj;
}

double free_energy(const State& s, const ModelParams& p, const KernelData& k) {
  const Field& phi = s.phi;
  const Field& sigma = s.sigma;
  const Field conv = convolve(k, phi);
  const double* ph = phi.data();
  const double* sg = sigma.data();
  const double* a = k.a_field.data();
  const double* cv = conv.data();
  const double vol = phi.grid().cell_volume();
  const double local = detail::blocked_sum(phi.size(), [&](std::size_t i) {
    return p.A * F_eval(p.potential, ph[i], 0) + 0.5 * sg[i] * sg[i] + p.chi * sg[i] * (1.0 - ph[i]);
  });
  const double nonlocal =
      detail::blocked_sum(phi.size(), [&](std::size_t i) { return (a[i] * ph[i] - cv[i]) * ph[i]; });
  // (B/4) * (2 <a phi, phi> - 2 <J*phi, phi>)
  return vol * (local + 0.5 * p.B * nonlocal);
}

double mass_balance_residual(const StateTrajectory& traj, const ControlPair& controls,
                             [[maybe_unused]] const ModelParams& params) {
  const double dt = traj.time.dt();
  double worst = 0.0;
  for (std::size_t n = 0; n < traj.caches.size(); ++n) {
    const StepCache& c = traj.caches[n];
    if (!c.valid) throw StaleTrajectoryError("trajectory step cache missing");
    const Field& phi0 = traj.states[n].phi;
    const Field& phi1 = traj.states[n + 1].phi;
    Field source(phi0.grid());
    for (std::size_t i = 0; i < source.size(); ++i)
      source[i] = c.P[i] * c.gap[i] - c.h[i] * controls.u[n][i];
    const double lhs = (mass(phi1) - mass(phi0)) / dt;
    const double rhs = mass(source);
    const double scale = std::max({1.0, norm_l1(phi1 - phi0) / dt, norm_l1(source)});
    worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  return worst;
}

}  // namespace nlch
