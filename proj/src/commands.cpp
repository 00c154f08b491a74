#include "nlch/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <vector>

#include "json.hpp"
#include "nlch/config.hpp"
#include "nlch/errors.hpp"
#include "nlch/sensitivity.hpp"
#include "nlch/snapshot.hpp"

namespace nlch {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

std::string indexed(const std::string& stem, int n) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%05d.bin", stem.c_str(), n);
  return buf;
}

struct Context {
  const CommandOptions& opts;
  RunConfig config;

  std::ostream& out() const { return *opts.out_stream; }
  std::ostream& err() const { return *opts.err_stream; }
  void say(const std::string& line) const {
    if (!opts.quiet) out() << line << '\n';
  }
};

Context load(const CommandOptions& opts) {
  Context ctx{opts, load_config(opts.config)};
  if (opts.seed) ctx.config.seed = *opts.seed;
  return ctx;
}

fs::path output_dir(const Context& ctx) {
  if (ctx.opts.out) return *ctx.opts.out;
  const fs::path dir(ctx.config.output.dir);
  return dir.is_absolute() ? dir : ctx.config.base_dir / dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw Error("failed writing " + path.string());
}

// The manifest doubles as the directory lock: a manifest left in state
// "running" means another command owns the directory.
class RunDirectory {
 public:
  RunDirectory(fs::path dir, std::string command, const RunConfig& config)
      : dir_(std::move(dir)), command_(std::move(command)), hash_(config_hash(config)), seed_(config.seed) {
    fs::create_directories(dir_);
    const fs::path manifest = dir_ / "manifest.json";
    if (fs::exists(manifest)) {
      std::ifstream in(manifest);
      json m = json::parse(in, nullptr, false);
      if (m.is_discarded() || m.value("status", "") == "running")
        throw Error("output directory " + dir_.string() + " is locked by another run (manifest.json)");
    }
    write_text(dir_ / "config.json", write_config(config));
    files_.push_back("config.json");
    write_manifest("running");
  }

  const fs::path& dir() const { return dir_; }
  fs::path file(const std::string& name) {
    files_.push_back(name);
    return dir_ / name;
  }
  void finish(const std::string& status, const json& extra = json::object()) {
    write_manifest(status, extra);
    done_ = true;
  }
  ~RunDirectory() {
    if (!done_) {
      try {
        write_manifest("failed");
      } catch (...) {
      }
    }
  }

 private:
  void write_manifest(const std::string& status, const json& extra = json::object()) {
    json m{{"command", command_}, {"config_hash", hash_}, {"seed", seed_}, {"status", status}, {"files", files_}};
    for (const auto& [k, v] : extra.items()) m[k] = v;
    write_text(dir_ / "manifest.json", m.dump(2) + "\n");
  }

  fs::path dir_;
  std::string command_;
  std::string hash_;
  std::uint64_t seed_;
  std::vector<std::string> files_;
  bool done_ = false;
};

int guarded(const CommandOptions& opts, const std::function<int()>& body) {
  std::ostream& err = *opts.err_stream;
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return exit_validation;
  } catch (const StepError& e) {
    err << "solver error at step " << e.step << ": " << e.what() << '\n';
    return exit_solver;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << '\n';
    return exit_solver;
  } catch (const InstabilityError& e) {
    err << "solver error: " << e.what() << '\n';
    return exit_solver;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return exit_validation;
  } catch (const OutOfScopeError& e) {
    err << "out of scope: " << e.what() << '\n';
    return exit_validation;
  } catch (const HypothesisViolation& e) {
    err << "validation error: " << e.what() << '\n';
    return exit_validation;
  } catch (const InvalidGridError& e) {
    err << "validation error: " << e.what() << '\n';
    return exit_validation;
  } catch (const UnderResolvedKernelError& e) {
    err << "validation error: " << e.what() << '\n';
    return exit_validation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_infrastructure;
  }
}

ControlPair random_direction(const Grid& grid, int steps, double dt, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  ControlPair d = ControlPair::zeros(grid, steps);
  for (int n = 0; n < steps; ++n)
    for (std::size_t i = 0; i < grid.size(); ++i) {
      d.u[static_cast<std::size_t>(n)][i] = normal(rng);
      d.v[static_cast<std::size_t>(n)][i] = normal(rng);
    }
  return (1.0 / norm_l2(d, dt)) * d;
}

Cotangent random_cotangent(const Grid& grid, int steps, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Cotangent c = Cotangent::zeros(grid, steps);
  auto fill = [&](Field& f) {
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = normal(rng);
  };
  fill(c.phi_T);
  fill(c.sigma_T);
  for (auto& f : c.phi_run) fill(f);
  for (auto& f : c.sigma_run) fill(f);
  return c;
}

// sqrt(sum_n dt |a_n - b_n|^2 + |a_N - b_N|^2) over phi and sigma.
double trajectory_distance(const std::vector<State>& a, const std::vector<State>& b,
                           const std::vector<TangentState>* lin, double eps, double dt) {
  double total = 0.0;
  const std::size_t last = a.size() - 1;
  for (std::size_t n = 1; n < a.size(); ++n) {
    Field dphi = a[n].phi - b[n].phi;
    Field dsig = a[n].sigma - b[n].sigma;
    if (lin != nullptr) {
      dphi.axpy(-eps, (*lin)[n].xi);
      dsig.axpy(-eps, (*lin)[n].rho);
    }
    const double w = n == last ? 1.0 + dt : dt;
    total += w * (inner_product(dphi, dphi) + inner_product(dsig, dsig));
  }
  return std::sqrt(total);
}

void write_monitors(const fs::path& path, const std::vector<MonitorRow>& rows) {
  std::ostringstream os;
  os << "step,time,energy,mass_phi,mass_sigma,sup_phi,sup_sigma\n";
  for (const auto& r : rows)
    os << r.step << ',' << fmt(r.time) << ',' << fmt(r.energy) << ',' << fmt(r.mass_phi) << ','
       << fmt(r.mass_sigma) << ',' << fmt(r.sup_phi) << ',' << fmt(r.sup_sigma) << '\n';
  write_text(path, os.str());
}

json nullable(double x) { return std::isnan(x) ? json(nullptr) : json(x); }

}  // namespace

int cmd_validate(const CommandOptions& opts) {
  return guarded(opts, [&] {
    const Context ctx = load(opts);
    const Problem p = build_problem(ctx.config);
    ctx.say("config ok: " + opts.config.string());
    ctx.say("  config_hash         " + config_hash(ctx.config));
    ctx.say("  cells               " + std::to_string(p.grid.size()));
    ctx.say("  convolution         " + to_string(p.kernel.method));
    ctx.say("  a* / b*             " + sci(p.kernel.a_star) + " / " + sci(p.kernel.b_star));
    ctx.say("  ellipticity margin  " + sci(p.ellipticity_margin));
    return static_cast<int>(exit_ok);
  });
}

int cmd_simulate(const CommandOptions& opts) {
  return guarded(opts, [&] {
    const Context ctx = load(opts);
    const Problem p = build_problem(ctx.config);
    RunDirectory run(output_dir(ctx), "simulate", ctx.config);
    const StateTrajectory traj = simulate(p.phi0, p.sigma0, p.c0, p.params, p.kernel, p.time, p.scheme);

    write_monitors(run.file("monitors.csv"), traj.monitors);
    const int stride = ctx.config.output.snapshot_stride;
    const int steps = p.time.steps;
    for (int n = 0; n <= steps; ++n) {
      if (n % stride != 0 && n != steps) continue;
      const State& s = traj.states[static_cast<std::size_t>(n)];
      const double t = n * p.time.dt();
      write_snapshot(run.file(indexed("phi", n)), s.phi, "phi", t);
      write_snapshot(run.file(indexed("sigma", n)), s.sigma, "sigma", t);
    }
    const MonitorRow& last = traj.monitors.back();
    run.finish("complete", {{"steps", steps}});
    ctx.say("simulated " + std::to_string(steps) + " steps: energy " + sci(last.energy) + ", mass(phi) " +
            sci(last.mass_phi) + ", |phi|_inf " + sci(last.sup_phi));
    ctx.say("output: " + run.dir().string());
    return static_cast<int>(exit_ok);
  });
}

int cmd_gradcheck(const CommandOptions& opts) {
  return guarded(opts, [&] {
    const Context ctx = load(opts);
    const Problem p = build_problem(ctx.config);
    if (p.params.chi != 0.0) throw OutOfScopeError("gradcheck requires chi = 0");
    const GradcheckConfig& gc = ctx.config.gradcheck;
    const double dt = p.time.dt();
    const int steps = p.time.steps;
    const Stepper stepper(p.params, p.kernel, dt, p.scheme);
    std::mt19937_64 rng(ctx.config.seed);

    auto run_forward = [&](const ControlPair& c) {
      return simulate(p.phi0, p.sigma0, c, p.params, p.kernel, p.time, p.scheme);
    };
    auto reduced_cost = [&](const ControlPair& c) { return cost(run_forward(c), c, p.cost); };

    const StateTrajectory base = run_forward(p.c0);
    const double J0 = cost(base, p.c0, p.cost);
    AdjointTrajectory adj = adjoint_sweep(base, p.cost, stepper);
    if (opts.corrupt_adjoint) {
      for (auto& f : adj.p) f *= 1.01;
      for (auto& f : adj.r) f *= 0.99;
    }
    const ControlPair grad = reduced_gradient(p.c0, base, adj, p.cost);
    bool pass = true;

    double worst_gap = 0.0;
    for (int k = 0; k < gc.probes; ++k) {
      const ControlPair dir = random_direction(p.grid, steps, dt, rng);
      const Cotangent seed = random_cotangent(p.grid, steps, rng);
      worst_gap = std::max(worst_gap, duality_gap(base, stepper, dir, seed));
    }
    const bool gap_ok = worst_gap <= gc.duality_tol;
    pass = pass && gap_ok;
    ctx.say("cost J(c0) = " + fmt(J0) + ", |grad| = " + sci(norm_l2(grad, dt)));
    ctx.say("duality gap (max over " + std::to_string(gc.probes) + " probes): " + sci(worst_gap) +
            (gap_ok ? "  ok" : "  FAIL"));

    const std::vector<double> fd_eps{1e-3, 1e-4, 1e-5, 1e-6, 1e-7};
    ctx.say("finite differences: relative error |FD - <grad, d>| / |<grad, d>|");
    std::string header = "  dir  <grad,d>                ";
    for (double e : fd_eps) header += "  eps=" + sci(e);
    ctx.say(header);
    for (int k = 0; k < gc.directions; ++k) {
      const ControlPair dir = random_direction(p.grid, steps, dt, rng);
      const double dd = inner_product(grad, dir, dt);
      double best = std::numeric_limits<double>::infinity();
      char head[48];
      std::snprintf(head, sizeof head, "  %-3d  %+.15e", k, dd);
      std::string row = head;
      for (double eps : fd_eps) {
        ControlPair cp = p.c0, cm = p.c0;
        cp.axpy(eps, dir);
        cm.axpy(-eps, dir);
        const double fd = (reduced_cost(cp) - reduced_cost(cm)) / (2.0 * eps);
        const double err = dd != 0.0 ? std::abs(fd - dd) / std::abs(dd) : std::abs(fd - dd);
        best = std::min(best, err);
        row += "      " + sci(err);
      }
      const bool ok = best <= gc.fd_tol;
      pass = pass && ok;
      ctx.say(row + "   plateau " + sci(best) + (ok ? "  ok" : "  FAIL"));
    }

    const std::vector<double> taylor_eps{1e-1, 1e-2, 1e-3, 1e-4};
    ctx.say("Taylor remainder of the control-to-state map |S(c + e d) - S(c) - e S'(c) d|");
    for (int k = 0; k < gc.directions; ++k) {
      const ControlPair dir = random_direction(p.grid, steps, dt, rng);
      const std::vector<TangentState> lin = tangent_sweep(base, dir, stepper);
      std::vector<double> rem;
      std::string row = "  " + std::to_string(k);
      for (double eps : taylor_eps) {
        ControlPair c = p.c0;
        c.axpy(eps, dir);
        rem.push_back(trajectory_distance(run_forward(c).states, base.states, &lin, eps, dt));
        row += "  " + sci(rem.back());
      }
      double order = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j + 1 < rem.size(); ++j)
        if (rem[j + 1] > 0.0) order = std::min(order, std::log10(rem[j] / rem[j + 1]));
      const bool ok = order >= gc.taylor_order_min;
      pass = pass && ok;
      ctx.say(row + "  order " + (std::isinf(order) ? std::string("exact") : sci(order)) + (ok ? "  ok" : "  FAIL"));
    }

    ctx.say(pass ? "gradcheck passed" : "gradcheck FAILED");
    return static_cast<int>(pass ? exit_ok : exit_check_failure);
  });
}

int cmd_optimize(const CommandOptions& opts) {
  return guarded(opts, [&] {
    const Context ctx = load(opts);
    const Problem p = build_problem(ctx.config);
    validate(p.cost, p.grid, p.time.steps, true);
    RunDirectory run(output_dir(ctx), "optimize", ctx.config);

    OptimizeOptions oo = ctx.config.optimizer;
    oo.scheme = p.scheme;
    const OptimizeReport rep =
        pgd_optimize(p.c0, p.box, p.cost, p.phi0, p.sigma0, p.params, p.kernel, p.time, oo);

    std::ostringstream csv;
    csv << "iter,cost,residual,step,line_search\n";
    for (const auto& it : rep.iterations)
      csv << it.iter << ',' << fmt(it.cost) << ',' << fmt(it.residual) << ',' << fmt(it.step) << ','
          << it.line_search << '\n';
    write_text(run.file("iterations.csv"), csv.str());

    fs::create_directories(run.dir() / "controls");
    const double dt = p.time.dt();
    for (int n = 0; n < p.time.steps; ++n) {
      const auto un = static_cast<std::size_t>(n);
      write_snapshot(run.file("controls/" + indexed("u", n)), rep.controls.u[un], "u", n * dt);
      write_snapshot(run.file("controls/" + indexed("v", n)), rep.controls.v[un], "v", n * dt);
    }
    const State& fin = rep.trajectory.states.back();
    write_snapshot(run.file("phi_final.bin"), fin.phi, "phi", p.time.T);
    write_snapshot(run.file("sigma_final.bin"), fin.sigma, "sigma", p.time.T);

    const ProjectionConsistency pc = projection_consistency(rep.controls, rep.trajectory, rep.adjoint, p.cost, p.box);
    const json report{{"termination", to_string(rep.termination)},
                      {"iterations", static_cast<int>(rep.iterations.size()) - 1},
                      {"initial_cost", rep.iterations.front().cost},
                      {"final_cost", rep.final_cost()},
                      {"final_residual", rep.final_residual()},
                      {"u_defect", nullable(pc.u_defect)},
                      {"v_defect", nullable(pc.v_defect)}};
    write_text(run.file("projection_consistency.json"), report.dump(2) + "\n");
    run.finish("complete", {{"termination", to_string(rep.termination)}});

    ctx.say("termination: " + to_string(rep.termination) + " after " +
            std::to_string(rep.iterations.size() - 1) + " iterations");
    ctx.say("cost " + sci(rep.iterations.front().cost) + " -> " + sci(rep.final_cost()) + ", residual " +
            sci(rep.final_residual()));
    ctx.say("projection defect: u " + (pc.u_checked ? sci(pc.u_defect) : std::string("n/a")) + ", v " +
            (pc.v_checked ? sci(pc.v_defect) : std::string("n/a")));
    ctx.say("output: " + run.dir().string());
    return static_cast<int>(exit_ok);
  });
}

int run_command(const std::string& name, const CommandOptions& opts) {
  if (name == "validate") return cmd_validate(opts);
  if (name == "simulate") return cmd_simulate(opts);
  if (name == "gradcheck") return cmd_gradcheck(opts);
  if (name == "optimize") return cmd_optimize(opts);
  *opts.err_stream << "unknown command '" << name << "'\n";
  return exit_infrastructure;
}

}  // namespace nlch
