// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include "helpers.hpp"
#include "nlch/commands.hpp"
#include "nlch/config.hpp"
#include "nlch/control.hpp"
#include "nlch/errors.hpp"
#include "nlch/sensitivity.hpp"

using namespace nlch;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", x);
  return buf;
}

struct Desk {
  KernelData k;
  ModelParams p;
  TimeGrid tg;
  Field phi0, sigma0;
};

Desk desk1d(int cells, int steps) {
  Desk d{testutil::desk_kernel(cells), ModelParams{}, TimeGrid{1.0, steps}, {}, {}};
  d.phi0 = testutil::bump(d.k.grid, -0.4, 1.0, 0.12);
  d.sigma0 = Field(d.k.grid, 1.0);
  return d;
}

StateTrajectory run(const Desk& d, const ControlPair& c) { return simulate(d.phi0, d.sigma0, c, d.p, d.k, d.tg); }

double state_distance(const StateTrajectory& a, const StateTrajectory& b, const std::vector<TangentState>* lin,
                      double eps) {
  double total = 0.0;
  for (std::size_t n = 1; n < a.states.size(); ++n) {
    Field dphi = a.states[n].phi - b.states[n].phi;
    Field dsig = a.states[n].sigma - b.states[n].sigma;
    if (lin) {
      dphi.axpy(-eps, (*lin)[n].xi);
      dsig.axpy(-eps, (*lin)[n].rho);
    }
    total += inner_product(dphi, dphi) + inner_product(dsig, dsig);
  }
  return std::sqrt(a.time.dt() * total);
}

Cotangent random_seed(const Grid& g, int steps, std::mt19937_64& rng) {
  Cotangent c = Cotangent::zeros(g, steps);
  c.phi_T = testutil::random_field(g, rng);
  c.sigma_T = testutil::random_field(g, rng);
  for (auto& f : c.phi_run) f = testutil::random_field(g, rng);
  for (auto& f : c.sigma_run) f = testutil::random_field(g, rng);
  return c;
}

CostSpec tracking(const Grid& g, int steps) {
  CostSpec spec = zero_cost(g, steps);
  spec.alpha_Omega = 1.0;
  spec.alpha_Q = 1.0;
  spec.alpha_u = 1e-2;
  spec.beta_v = 1e-2;
  spec.phi_Omega = Field(g, -0.3);
  for (auto& f : spec.phi_Q) f = Field(g, -0.3);
  return spec;
}

Outcome operators() {
  std::mt19937_64 rng(101);
  double mass_worst = 0, sa_worst = 0, conv_worst = 0, fft_worst = 0;
  const Grid grids[] = {Grid::line(64, 1.0), Grid::rect(32, 32, 1.0, 1.0)};
  for (const Grid& g : grids) {
    const KernelSpec ks{KernelFamily::gaussian, g.dim() == 1 ? 4.0 : 30.0, 0.1};
    const KernelData direct = build_kernel(ks, g, ConvolutionMethod::direct);
    const KernelData fft = build_kernel(ks, g, ConvolutionMethod::fft);
    for (int t = 0; t < 25; ++t) {
      const Field f = testutil::random_field(g, rng);
      const Field h = testutil::random_field(g, rng);
      const Field lf = laplacian_neumann(f), lh = laplacian_neumann(h);
      mass_worst = std::max(mass_worst, std::abs(mass(lf)) / norm_l1(lf));
      sa_worst = std::max(sa_worst, std::abs(inner_product(lf, h) - inner_product(f, lh)) / (norm_l2(lf) * norm_l2(h)));
      conv_worst = std::max({conv_worst, convolution_adjoint_check(direct, f, h), convolution_adjoint_check(fft, f, h)});
      const Field cd = convolve(direct, f);
      fft_worst = std::max(fft_worst, norm_linf(convolve(fft, f) - cd) / norm_linf(cd));
    }
  }
  return {mass_worst <= 1e-13 && sa_worst <= 1e-12 && conv_worst <= 1e-12 && fft_worst <= 1e-12,
          "mass " + sci(mass_worst) + ", self-adjoint " + sci(sa_worst) + ", conv adjoint " + sci(conv_worst) +
              ", fft-direct " + sci(fft_worst)};
}

Outcome conservation() {
  Desk d = desk1d(64, 100);
  d.p.proliferation = ProliferationFamily::constant_zero;
  std::mt19937_64 rng(102);
  d.phi0 = 0.1 * testutil::random_field(d.k.grid, rng) + testutil::bump(d.k.grid, -0.2, 0.9, 0.1);
  const StateTrajectory flow = run(d, ControlPair::zeros(d.k.grid, d.tg.steps));
  const double m0 = flow.monitors.front().mass_phi;
  const double scale = std::max(1.0, std::abs(flow.monitors.front().energy));
  double rise = 0, drift = 0;
  for (std::size_t n = 1; n < flow.monitors.size(); ++n) {
    rise = std::max(rise, (flow.monitors[n].energy - flow.monitors[n - 1].energy) / scale);
    drift = std::max(drift, std::abs(flow.monitors[n].mass_phi - m0) / std::max(1.0, norm_l1(d.phi0)));
  }

  Desk r = desk1d(48, 60);
  const ControlPair c = testutil::random_controls(r.k.grid, r.tg.steps, rng, 0.5);
  const double balance = mass_balance_residual(run(r, c), c, r.p);
  return {rise <= 1e-12 && drift <= 1e-13 && balance <= 1e-12,
          "max energy rise " + sci(rise) + ", mass drift " + sci(drift) + ", mass balance " + sci(balance)};
}

Outcome frechet() {
  std::mt19937_64 rng(103);
  const Desk d = desk1d(32, 40);
  const ControlPair c = testutil::random_controls(d.k.grid, d.tg.steps, rng, 0.3);
  const StateTrajectory base = run(d, c);
  const Stepper stepper(d.p, d.k, d.tg.dt());
  double order_min = 1e9;
  for (int t = 0; t < 3; ++t) {
    const ControlPair dir = testutil::random_controls(d.k.grid, d.tg.steps, rng);
    const auto lin = tangent_sweep(base, dir, stepper);
    std::vector<double> rem;
    for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
      ControlPair ce = c;
      ce.axpy(eps, dir);
      rem.push_back(state_distance(run(d, ce), base, &lin, eps));
    }
    for (std::size_t j = 0; j + 1 < rem.size(); ++j) order_min = std::min(order_min, std::log10(rem[j] / rem[j + 1]));
  }
  double gap = 0;
  for (int t = 0; t < 20; ++t) {
    const ControlPair dir = testutil::random_controls(d.k.grid, d.tg.steps, rng);
    gap = std::max(gap, duality_gap(base, stepper, dir, random_seed(d.k.grid, d.tg.steps, rng)));
  }
  char order[16];
  std::snprintf(order, sizeof order, "%.3f", order_min);
  return {order_min >= 1.9 && gap <= 1e-10, std::string("min Taylor order ") + order + ", duality gap " + sci(gap)};
}

Outcome gradient() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(104);
  const Desk d = desk1d(32, 40);
  CostSpec spec = tracking(d.k.grid, d.tg.steps);
  spec.beta_Omega = 0.3;
  spec.beta_Q = 0.2;
  for (auto& f : spec.sigma_Q) f = Field(d.k.grid, 0.5);
  const ControlPair c = testutil::random_controls(d.k.grid, d.tg.steps, rng, 0.3);
  const StateTrajectory traj = run(d, c);
  const Stepper stepper(d.p, d.k, d.tg.dt());
  const ControlPair g = reduced_gradient(c, traj, adjoint_sweep(traj, spec, stepper), spec);
  double worst = 0;
  for (int t = 0; t < 5; ++t) {
    const ControlPair dir = testutil::random_controls(d.k.grid, d.tg.steps, rng);
    const double dd = inner_product(g, dir, d.tg.dt());
    double best = 1.0;
    for (double eps : {1e-3, 1e-4, 1e-5, 1e-6, 1e-7}) {
      ControlPair cp = c, cm = c;
      cp.axpy(eps, dir);
      cm.axpy(-eps, dir);
      const double fd = (cost(run(d, cp), cp, spec) - cost(run(d, cm), cm, spec)) / (2 * eps);
      best = std::min(best, std::abs(fd - dd) / std::abs(dd));
    }
    worst = std::max(worst, best);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  char t[16];
  std::snprintf(t, sizeof t, "%.2f", secs);
  return {worst <= 1e-5 && secs < 10.0, "worst plateau error " + sci(worst) + " in " + t + " s"};
}

Outcome optimality() {
  const Desk d = desk1d(32, 20);
  const CostSpec spec = tracking(d.k.grid, d.tg.steps);
  const BoxConstraints box = BoxConstraints::constant(d.k.grid, d.tg.steps, -10, 10, -10, 10);
  OptimizeOptions oo;
  oo.tol = 1e-8;
  oo.max_iter = 400;
  const OptimizeReport rep =
      pgd_optimize(ControlPair::zeros(d.k.grid, d.tg.steps), box, spec, d.phi0, d.sigma0, d.p, d.k, d.tg, oo);
  double interior = 10.0;
  for (const auto* side : {&rep.controls.u, &rep.controls.v})
    for (const Field& f : *side) interior = std::min(interior, 10.0 - norm_linf(f));
  const ProjectionConsistency pc = projection_consistency(rep.controls, rep.trajectory, rep.adjoint, spec, box);
  return {rep.termination == Termination::converged && interior > 0 && pc.u_defect <= 1e-4 && pc.v_defect <= 1e-4,
          to_string(rep.termination) + " after " + std::to_string(rep.iterations.size() - 1) + " iterations, u defect " +
              sci(pc.u_defect) + ", v defect " + sci(pc.v_defect)};
}

Outcome manufactured() {
  const RunConfig cfg = parse_config(R"({
    "grid": {"dim": 1, "cells": [64]},
    "time": {"T": 1.0, "steps": 40},
    "initial": {"phi": {"type": "bumps", "background": -0.5,
                        "bumps": [{"center": [0.5], "amplitude": 1.0, "width": 0.1}]}},
    "cost": {"alpha_Omega": 1.0, "alpha_Q": 1.0, "alpha_u": 1e-6, "beta_v": 1e-6,
             "targets": {"type": "manufactured",
                         "u": {"type": "bumps", "background": 0.2, "bumps": [{"center": [0.3], "amplitude": 0.3, "width": 0.1}]},
                         "v": {"type": "bumps", "background": 0.0, "bumps": [{"center": [0.7], "amplitude": -0.4, "width": 0.1}]}}},
    "optimizer": {"tol": 1e-8, "max_iter": 200}})");
  const Problem p = build_problem(cfg);
  OptimizeOptions oo = cfg.optimizer;
  oo.scheme = p.scheme;
  auto optimize = [&](int iters) {
    oo.max_iter = iters;
    return pgd_optimize(p.c0, p.box, p.cost, p.phi0, p.sigma0, p.params, p.kernel, p.time, oo);
  };
  const OptimizeReport rep = optimize(200);
  const double ratio = rep.final_cost() / rep.iterations.front().cost;
  bool monotone = true;
  for (std::size_t i = 1; i < rep.iterations.size(); ++i)
    monotone = monotone && rep.iterations[i].cost <= rep.iterations[i - 1].cost;
  // Iterates are deterministic, so truncated runs reproduce the intermediate ones.
  bool feasible = project_box(rep.controls, p.box) == rep.controls;
  const int used = static_cast<int>(rep.iterations.size()) - 1;
  for (int k = 1; k < used; k *= 2) {
    const ControlPair ck = optimize(k).controls;
    feasible = feasible && project_box(ck, p.box) == ck;
  }
  return {ratio <= 0.01 && monotone && feasible,
          "cost ratio " + sci(ratio) + " after " + std::to_string(used) + " iterations, monotone " +
              (monotone ? "yes" : "no") + ", feasible " + (feasible ? "yes" : "no")};
}

Outcome boundedness() {
  std::mt19937_64 rng(107);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double sup = 0, start_sup = 0;
  int tripped = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const Grid g = trial % 3 == 2 ? Grid::rect(16, 16, 1.0, 1.0) : Grid::line(48, 1.0);
    const double width = 0.06 + 0.08 * U(rng);
    KernelData k = build_kernel({KernelFamily::gaussian, g.dim() == 1 ? 4.0 : 30.0, width}, g);
    ModelParams p;
    p.A = 0.5 + 1.5 * U(rng);
    p.B = 2.0 + 6.0 * U(rng);
    p.proliferation = U(rng) < 0.5 ? ProliferationFamily::smoothed_ramp : ProliferationFamily::constant_zero;
    p.distribution = U(rng) < 0.5 ? DistributionFamily::same_as_P : DistributionFamily::constant_one;
    while (ellipticity_margin(p, k) <= 0.1) p.B *= 1.5;

    Field phi0 = testutil::bump(g, -1.0 + 0.8 * U(rng), 1.5 * U(rng), 0.05 + 0.15 * U(rng));
    phi0 += 0.2 * testutil::random_field(g, rng);
    phi0 *= (0.8 + 0.4 * U(rng)) / norm_linf(phi0);
    const TimeGrid tg{1.0, 60};
    const ControlPair c = testutil::random_controls(g, tg.steps, rng);  // inside the default [-1, 1] box
    try {
      const StateTrajectory traj = simulate(phi0, testutil::random_field(g, rng, 0.0, 1.0), c, p, k, tg);
      for (const auto& m : traj.monitors) sup = std::max(sup, m.sup_phi);
      start_sup = std::max(start_sup, traj.monitors.front().sup_phi);
    } catch (const StepError&) {
      ++tripped;
    }
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "max |phi| %.4f (initial %.4f)", sup, start_sup);
  return {tripped == 0 && sup <= 2.0 && start_sup <= 1.2,
          std::string(buf) + " over 10 configurations, guard trips " + std::to_string(tripped)};
}

Outcome continuity() {
  std::mt19937_64 rng(108);
  const Desk d = desk1d(32, 40);
  double spread = 0;
  for (int t = 0; t < 3; ++t) {
    const ControlPair c = testutil::random_controls(d.k.grid, d.tg.steps, rng, 0.5);
    const ControlPair dir = testutil::random_controls(d.k.grid, d.tg.steps, rng);
    const StateTrajectory base = run(d, c);
    const double dn = norm_l2(dir, d.tg.dt());
    std::vector<double> ratios;
    for (double eps : {1e-2, 5e-3, 2.5e-3}) {
      ControlPair ce = c;
      ce.axpy(eps, dir);
      ratios.push_back(state_distance(run(d, ce), base, nullptr, 0.0) / (eps * dn));
    }
    const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
    spread = std::max(spread, *hi / *lo - 1.0);
  }
  return {spread <= 0.10, "worst ratio spread " + sci(spread)};
}

bool same_tree(const fs::path& a, const fs::path& b) {
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    ++files;
    const fs::path other = b / fs::relative(e.path(), a);
    if (!fs::exists(other) || testutil::slurp(e.path()) != testutil::slurp(other)) return false;
  }
  return files > 0;
}

Outcome determinism() {
  const fs::path dir = testutil::scratch_dir("acceptance_determinism");
  const fs::path cfg = dir / "run.json";
  std::ofstream(cfg) << R"({
    "grid": {"dim": 1, "cells": [32]}, "time": {"T": 1.0, "steps": 40},
    "initial": {"phi": {"type": "bumps", "background": -0.5,
                        "bumps": [{"center": [0.5], "amplitude": 1.0, "width": 0.1}]}},
    "controls": {"u": 0.1},
    "cost": {"alpha_Omega": 1.0, "alpha_Q": 1.0, "targets": {"phi_Omega": -0.3, "phi_Q": -0.3}},
    "seed": 7})";
  std::string detail;
  bool pass = true;
  for (const std::string cmd : {"simulate", "optimize"}) {
    bool same = true;
    for (const char* tag : {"a", "b"}) {
      std::ostringstream out, err;
      CommandOptions o;
      o.config = cfg;
      o.out = dir / (cmd + "_" + tag);
      o.out_stream = &out;
      o.err_stream = &err;
      same = same && run_command(cmd, o) == exit_ok;
    }
    same = same && same_tree(dir / (cmd + "_a"), dir / (cmd + "_b"));
    pass = pass && same;
    detail += (detail.empty() ? "" : ", ") + cmd + (same ? " identical" : " differs");
  }
  return {pass, detail};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"discrete operator exactness", operators},
      {"conservation and dissipation", conservation},
      {"Frechet order and duality", frechet},
      {"gradient vs finite differences", gradient},
      {"optimality-condition fidelity", optimality},
      {"manufactured control recovery", manufactured},
      {"boundedness", boundedness},
      {"continuous dependence", continuity},
      {"determinism", determinism},
  };
  int failed = 0;
  int id = 0;
  for (const auto& [name, check] : criteria) {
    ++id;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("criterion %d %s  %-32s %s\n", id, o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", id - failed, id);
  return failed == 0 ? 0 : 1;
}
