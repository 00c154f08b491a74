#include <sstream>
#include <string>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "nlch/commands.hpp"
#include "nlch/snapshot.hpp"

using namespace nlch;
namespace fs = std::filesystem;

namespace {

const char* kDesk = R"({
  "grid": {"dim": 1, "cells": [32]},
  "time": {"T": 1.0, "steps": 40},
  "initial": {"phi": {"type": "bumps", "background": -0.5,
                      "bumps": [{"center": [0.5], "amplitude": 1.0, "width": 0.1}]}},
  "controls": {"u": 0.1},
  "cost": {"alpha_Omega": 1.0, "alpha_Q": 1.0, "targets": {"phi_Omega": -0.3, "phi_Q": -0.3}},
  "output": {"snapshot_stride": 10}
})";

struct Run {
  int code;
  std::string out, err;
};

Run run(const std::string& command, const fs::path& config, const fs::path& out, bool corrupt = false) {
  std::ostringstream o, e;
  CommandOptions opts;
  opts.config = config;
  opts.out = out;
  opts.corrupt_adjoint = corrupt;
  opts.out_stream = &o;
  opts.err_stream = &e;
  const int code = run_command(command, opts);
  return {code, o.str(), e.str()};
}

fs::path write_config_file(const fs::path& dir, const std::string& name, const std::string& text) {
  std::ofstream(dir / name) << text;
  return dir / name;
}

// Merges `patch` into the desk config.
std::string desk_with(const std::string& patch) {
  nlohmann::json j = nlohmann::json::parse(kDesk);
  j.merge_patch(nlohmann::json::parse(patch));
  return j.dump();
}

std::vector<std::vector<double>> read_csv(const fs::path& p, std::string& header) {
  std::ifstream f(p);
  std::getline(f, header);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(f, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

bool same_tree(const fs::path& a, const fs::path& b) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), a));
  if (files.empty()) return false;
  for (const auto& f : files)
    if (!fs::exists(b / f) || testutil::slurp(a / f) != testutil::slurp(b / f)) return false;
  return true;
}

}  // namespace

TEST_CASE("validate") {
  const auto dir = testutil::scratch_dir("cli_validate");
  CHECK(run("validate", write_config_file(dir, "ok.json", kDesk), dir / "o").code == exit_ok);
  const Run bad = run("validate", write_config_file(dir, "bad.json", R"({"model": {"B": 0}})"), dir / "o");
  CHECK(bad.code == exit_validation);
  CHECK(bad.err.find("c0 <= chi^2") != std::string::npos);
  CHECK(run("validate", dir / "absent.json", dir / "o").code == exit_validation);
  CHECK(run("bogus", dir / "ok.json", dir / "o").code == exit_infrastructure);
}

TEST_CASE("simulate writes monitors, snapshots and a manifest") {
  const auto dir = testutil::scratch_dir("cli_simulate");
  const auto cfg = write_config_file(dir, "run.json", kDesk);
  const Run r = run("simulate", cfg, dir / "out");
  REQUIRE(r.code == exit_ok);
  std::string header;
  const auto rows = read_csv(dir / "out" / "monitors.csv", header);
  CHECK(header == "step,time,energy,mass_phi,mass_sigma,sup_phi,sup_sigma");
  CHECK(rows.size() == 41);
  for (int n : {0, 10, 20, 30, 40}) {
    char name[32];
    std::snprintf(name, sizeof name, "phi_%05d.bin", n);
    CHECK(fs::exists(dir / "out" / name));
  }
  CHECK_FALSE(fs::exists(dir / "out" / "phi_00005.bin"));
  const Snapshot last = read_snapshot(dir / "out" / "phi_00040.bin");
  CHECK(last.time == 1.0);
  CHECK(last.field.size() == 32);

  std::ifstream mf(dir / "out" / "manifest.json");
  const auto manifest = nlohmann::json::parse(mf);
  CHECK(manifest["status"] == "complete");
  CHECK(manifest["command"] == "simulate");
  CHECK(manifest["config_hash"].get<std::string>().size() == 16);
}

TEST_CASE("constant data with P = 0 keeps the energy column constant") {
  const auto dir = testutil::scratch_dir("cli_constant");
  const auto cfg = write_config_file(dir, "run.json", R"({
    "model": {"proliferation": "constant_zero"}, "initial": {"phi": 0.3, "sigma": 0.8}})");
  REQUIRE(run("simulate", cfg, dir / "out").code == exit_ok);
  std::string header;
  const auto rows = read_csv(dir / "out" / "monitors.csv", header);
  for (const auto& row : rows) CHECK(std::abs(row[2] - rows[0][2]) <= 1e-12);
}

TEST_CASE("gradient-flow runs dissipate energy") {
  const auto dir = testutil::scratch_dir("cli_flow");
  const auto cfg = write_config_file(dir, "run.json", desk_with(R"({
    "model": {"proliferation": "constant_zero"}, "controls": {"u": 0.0}, "time": {"steps": 100}})"));
  REQUIRE(run("simulate", cfg, dir / "out").code == exit_ok);
  std::string header;
  const auto rows = read_csv(dir / "out" / "monitors.csv", header);
  for (std::size_t n = 1; n < rows.size(); ++n) CHECK(rows[n][2] <= rows[n - 1][2] + 1e-12 * std::abs(rows[0][2]));
}

TEST_CASE("repeated runs give identical files") {
  const auto dir = testutil::scratch_dir("cli_determinism");
  const auto cfg = write_config_file(dir, "run.json", kDesk);
  for (const char* cmd : {"simulate", "optimize"}) {
    REQUIRE(run(cmd, cfg, dir / (std::string(cmd) + "_a")).code == exit_ok);
    REQUIRE(run(cmd, cfg, dir / (std::string(cmd) + "_b")).code == exit_ok);
    CHECK(same_tree(dir / (std::string(cmd) + "_a"), dir / (std::string(cmd) + "_b")));
  }
}

TEST_CASE("solver failures exit with the solver code and name the step") {
  const auto dir = testutil::scratch_dir("cli_blowup");
  const auto cfg = write_config_file(dir, "run.json", desk_with(R"({"controls": {"u": -2000.0}})"));
  const Run r = run("simulate", cfg, dir / "out");
  CHECK(r.code == exit_solver);
  CHECK(r.err.find("step 0") != std::string::npos);
  std::ifstream mf(dir / "out" / "manifest.json");
  CHECK(nlohmann::json::parse(mf)["status"] == "failed");
}

TEST_CASE("a running manifest locks the output directory") {
  const auto dir = testutil::scratch_dir("cli_lock");
  const auto cfg = write_config_file(dir, "run.json", kDesk);
  fs::create_directories(dir / "out");
  std::ofstream(dir / "out" / "manifest.json") << R"({"status": "running"})";
  const Run r = run("simulate", cfg, dir / "out");
  CHECK(r.code == exit_infrastructure);
  CHECK(r.err.find("locked") != std::string::npos);
}

TEST_CASE("gradcheck") {
  const auto dir = testutil::scratch_dir("cli_gradcheck");
  const auto cfg = write_config_file(dir, "run.json", kDesk);
  const Run ok = run("gradcheck", cfg, dir / "o");
  CHECK(ok.code == exit_ok);
  CHECK(ok.out.find("duality gap") != std::string::npos);
  CHECK(ok.out.find("gradcheck passed") != std::string::npos);

  CHECK(run("gradcheck", cfg, dir / "o", true).code == exit_check_failure);

  const auto zero = write_config_file(dir, "zero.json", desk_with(R"({"cost": {
    "alpha_Omega": 0, "alpha_Q": 0, "beta_Omega": 0, "beta_Q": 0, "alpha_u": 0, "beta_v": 0}})"));
  const Run z = run("gradcheck", zero, dir / "o");
  CHECK(z.code == exit_ok);
  CHECK(z.out.find("|grad| = 0.000e+00") != std::string::npos);
  std::stringstream lines(z.out);
  std::string line;
  int fd_rows = 0;
  while (std::getline(lines, line))
    if (line.find("plateau") != std::string::npos) {
      ++fd_rows;
      CHECK(line.find("+0.000000000000000e+00      0.000e+00      0.000e+00      0.000e+00      0.000e+00      0.000e+00") !=
            std::string::npos);
    }
  CHECK(fd_rows == 5);

  const auto chi = write_config_file(dir, "chi.json", desk_with(R"({"model": {"chi": 0.2}})"));
  CHECK(run("gradcheck", chi, dir / "o").code == exit_validation);
}

TEST_CASE("optimize") {
  const auto dir = testutil::scratch_dir("cli_optimize");
  const auto manufactured = write_config_file(dir, "m.json", R"({
    "grid": {"dim": 1, "cells": [32]}, "time": {"T": 1.0, "steps": 20},
    "initial": {"phi": {"type": "bumps", "background": -0.5,
                        "bumps": [{"center": [0.5], "amplitude": 1.0, "width": 0.1}]}},
    "cost": {"alpha_Omega": 1, "alpha_Q": 1, "alpha_u": 1e-6, "beta_v": 1e-6,
             "targets": {"type": "manufactured", "u": 0.3, "v": -0.2}},
    "optimizer": {"tol": 1e-8, "max_iter": 200}})");
  REQUIRE(run("optimize", manufactured, dir / "m").code == exit_ok);
  std::ifstream rf(dir / "m" / "projection_consistency.json");
  const auto report = nlohmann::json::parse(rf);
  CHECK(report["final_cost"].get<double>() <= 0.01 * report["initial_cost"].get<double>());
  std::string header;
  const auto rows = read_csv(dir / "m" / "iterations.csv", header);
  CHECK(header == "iter,cost,residual,step,line_search");
  CHECK(fs::exists(dir / "m" / "controls" / "u_00019.bin"));
  CHECK(fs::exists(dir / "m" / "phi_final.bin"));

  const auto trivial = write_config_file(dir, "t.json", R"({
    "cost": {"alpha_Omega": 0, "alpha_u": 1}, "optimizer": {"tol": 1e-6}})");
  REQUIRE(run("optimize", trivial, dir / "t").code == exit_ok);
  const auto trows = read_csv(dir / "t" / "iterations.csv", header);
  CHECK(trows.size() == 1);

  const auto infeasible = write_config_file(dir, "i.json", R"({"box": {"u_min": 0.5, "u_max": 0.2}})");
  CHECK(run("optimize", infeasible, dir / "i").code == exit_validation);
  const auto zero = write_config_file(dir, "z.json", R"({"cost": {"alpha_Omega": 0, "alpha_u": 0, "beta_v": 0}})");
  CHECK(run("optimize", zero, dir / "z").code == exit_validation);
}
