#include "nlch/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "nlch/errors.hpp"
#include "nlch/snapshot.hpp"

namespace nlch {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += "\n  - " + s;
  return out;
}

// Collects every problem instead of stopping at the first.
class Reader {
 public:
  std::vector<std::string> errors;

  void error(const std::string& where, const std::string& what) { errors.push_back(where + ": " + what); }

  void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) return;
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : obj.items())
      if (!ok.count(key)) error(where, "unknown key '" + key + "'");
  }

  const json* section(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) return nullptr;
    const json& s = obj[key];
    if (!s.is_object()) {
      error(where + "." + key, "expected an object");
      return nullptr;
    }
    return &s;
  }

  template <typename T>
  void get(const json* obj, const char* key, T& out, const std::string& where) {
    if (obj == nullptr || !obj->contains(key)) return;
    const json& v = (*obj)[key];
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw std::runtime_error("expected a number");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw std::runtime_error("expected an integer");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw std::runtime_error("expected a string");
      }
      out = v.get<T>();
    } catch (const std::exception& e) {
      error(where + "." + key, e.what());
    }
  }

  template <typename Enum, typename Parse>
  void get_enum(const json* obj, const char* key, Enum& out, Parse parse, const std::string& where) {
    std::string s;
    if (obj == nullptr || !obj->contains(key)) return;
    get(obj, key, s, where);
    try {
      out = parse(s);
    } catch (const std::exception& e) {
      error(where + "." + key, e.what());
    }
  }

  FieldSpec field_spec(const json& v, const std::string& where) {
    if (v.is_number()) return FieldSpec::constant(v.get<double>());
    FieldSpec f;
    if (!v.is_object()) {
      error(where, "expected a number or a field object");
      return f;
    }
    check_keys(v, where, {"type", "value", "background", "bumps", "path"});
    std::string type = "constant";
    get(&v, "type", type, where);
    if (type == "constant") {
      f.kind = FieldSpec::Kind::constant;
      get(&v, "value", f.value, where);
    } else if (type == "bumps") {
      f.kind = FieldSpec::Kind::bumps;
      get(&v, "background", f.value, where);
      if (v.contains("bumps")) {
        if (!v["bumps"].is_array()) {
          error(where + ".bumps", "expected an array");
        } else {
          int idx = 0;
          for (const auto& b : v["bumps"]) {
            const std::string bw = where + ".bumps[" + std::to_string(idx++) + "]";
            Bump bump;
            check_keys(b, bw, {"center", "amplitude", "width"});
            if (b.contains("center")) {
              const json& c = b["center"];
              if (!c.is_array() || c.empty() || c.size() > 2) {
                error(bw + ".center", "expected an array of 1 or 2 numbers");
              } else {
                for (std::size_t k = 0; k < c.size(); ++k) {
                  if (!c[k].is_number()) error(bw + ".center", "expected numbers");
                  else bump.center[k] = c[k].get<double>();
                }
              }
            }
            get(&b, "amplitude", bump.amplitude, bw);
            get(&b, "width", bump.width, bw);
            if (!(bump.width > 0.0)) error(bw + ".width", "must be positive");
            f.bumps.push_back(bump);
          }
        }
      }
    } else if (type == "file") {
      f.kind = FieldSpec::Kind::file;
      get(&v, "path", f.path, where);
      if (f.path.empty()) error(where + ".path", "file fields need a path");
    } else {
      error(where + ".type", "unknown field type '" + type + "' (constant | bumps | file)");
    }
    return f;
  }

  void field(const json* obj, const char* key, FieldSpec& out, const std::string& where) {
    if (obj == nullptr || !obj->contains(key)) return;
    out = field_spec((*obj)[key], where + "." + key);
  }
};

json field_json(const FieldSpec& f) {
  switch (f.kind) {
    case FieldSpec::Kind::constant: return json{{"type", "constant"}, {"value", f.value}};
    case FieldSpec::Kind::file: return json{{"type", "file"}, {"path", f.path}};
    default: {
      json bumps = json::array();
      for (const auto& b : f.bumps)
        bumps.push_back(json{{"center", {b.center[0], b.center[1]}}, {"amplitude", b.amplitude}, {"width", b.width}});
      return json{{"type", "bumps"}, {"background", f.value}, {"bumps", bumps}};
    }
  }
}

std::pair<int, int> line_col(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

void check_positive(Reader& r, double v, const std::string& where) {
  if (!(v > 0.0) || !std::isfinite(v)) r.error(where, "must be positive and finite");
}

void check_nonnegative(Reader& r, double v, const std::string& where) {
  if (!(v >= 0.0) || !std::isfinite(v)) r.error(where, "must be finite and >= 0");
}

void check_file(Reader& r, const FieldSpec& f, const std::filesystem::path& base, const std::string& where) {
  if (f.kind == FieldSpec::Kind::file && !f.path.empty() && !std::filesystem::exists(base / f.path))
    r.error(where, "file '" + (base / f.path).string() + "' does not exist");
}

// Semantic checks on a parsed configuration; appends to r.errors.
void validate_config(Reader& r, const RunConfig& c) {
  const GridConfig& g = c.grid;
  if (g.dim != 1 && g.dim != 2) r.error("grid.dim", "must be 1 or 2");
  for (int k = 0; k < std::min(std::max(g.dim, 1), 2); ++k) {
    if (g.cells[k] < 2) r.error("grid.cells", "need at least 2 cells per axis");
    check_positive(r, g.extent[k], "grid.extent");
  }
  check_positive(r, c.kernel.amplitude, "kernel.amplitude");
  check_positive(r, c.kernel.width, "kernel.width");
  check_positive(r, c.time.T, "time.T");
  if (c.time.steps < 1) r.error("time.steps", "must be >= 1");
  check_positive(r, c.scheme.blowup_guard, "solver.blowup_guard");
  check_positive(r, c.scheme.linear.cg_tol, "solver.cg_tol");
  check_nonnegative(r, c.model.lambda_s, "model.lambda_s");
  for (auto [v, name] : {std::pair{c.cost.alpha_Omega, "cost.alpha_Omega"}, {c.cost.alpha_Q, "cost.alpha_Q"},
                         {c.cost.beta_Omega, "cost.beta_Omega"}, {c.cost.beta_Q, "cost.beta_Q"},
                         {c.cost.alpha_u, "cost.alpha_u"}, {c.cost.beta_v, "cost.beta_v"}})
    check_nonnegative(r, v, name);
  check_positive(r, c.optimizer.tol, "optimizer.tol");
  check_positive(r, c.optimizer.initial_step, "optimizer.initial_step");
  if (c.optimizer.max_iter < 0) r.error("optimizer.max_iter", "must be >= 0");
  if (c.output.snapshot_stride < 1) r.error("output.snapshot_stride", "must be >= 1");
  if (c.gradcheck.probes < 1) r.error("gradcheck.probes", "must be >= 1");
  if (c.gradcheck.directions < 1) r.error("gradcheck.directions", "must be >= 1");

  const auto& b = c.box;
  if (b.u_min.kind == FieldSpec::Kind::constant && b.u_max.kind == FieldSpec::Kind::constant &&
      b.u_min.value > b.u_max.value)
    r.error("box", "u_min > u_max");
  if (b.v_min.kind == FieldSpec::Kind::constant && b.v_max.kind == FieldSpec::Kind::constant &&
      b.v_min.value > b.v_max.value)
    r.error("box", "v_min > v_max");

  const auto& base = c.base_dir;
  check_file(r, c.phi0, base, "initial.phi");
  check_file(r, c.sigma0, base, "initial.sigma");
  check_file(r, c.u0, base, "controls.u");
  check_file(r, c.v0, base, "controls.v");
  check_file(r, b.u_min, base, "box.u_min");
  check_file(r, b.u_max, base, "box.u_max");
  check_file(r, b.v_min, base, "box.v_min");
  check_file(r, b.v_max, base, "box.v_max");
  const auto& t = c.cost.targets;
  for (auto [f, name] : {std::pair{&t.phi_Omega, "cost.targets.phi_Omega"}, {&t.sigma_Omega, "cost.targets.sigma_Omega"},
                         {&t.phi_Q, "cost.targets.phi_Q"}, {&t.sigma_Q, "cost.targets.sigma_Q"},
                         {&t.u, "cost.targets.u"}, {&t.v, "cost.targets.v"}})
    check_file(r, *f, base, name);

  if (!r.errors.empty()) return;
  // Kernel resolution and the structural hypotheses need the grid.
  try {
    const Grid grid = g.make();
    const KernelData k = build_kernel(c.kernel, grid, c.convolution);
    validate_hypotheses(c.model, k);
  } catch (const HypothesisViolation& e) {
    r.error("model", e.what());
  } catch (const Error& e) {
    r.error("kernel", e.what());
  }
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> p)
    : ValidationError("invalid configuration:" + join(p)), problems(std::move(p)) {}

Grid GridConfig::make() const {
  return dim == 2 ? Grid::rect(cells[0], cells[1], extent[0], extent[1]) : Grid::line(cells[0], extent[0]);
}

Field FieldSpec::materialize(const Grid& grid, const std::filesystem::path& base_dir) const {
  switch (kind) {
    case Kind::constant: return Field(grid, value);
    case Kind::file: {
      Snapshot s = read_snapshot(base_dir / path);
      if (!(s.field.grid() == grid)) throw ValidationError("field file " + path + " does not match the grid");
      return std::move(s.field);
    }
    default: {
      Field f(grid, value);
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto idx = grid.unflatten(i);
        for (const Bump& b : bumps) {
          double r2 = 0.0;
          for (int k = 0; k < grid.dim(); ++k) {
            const double d = grid.center(k, idx[k]) - b.center[k];
            r2 += d * d;
          }
          f[i] += b.amplitude * std::exp(-r2 / (2.0 * b.width * b.width));
        }
      }
      return f;
    }
  }
}

bool RunConfig::operator==(const RunConfig& o) const {
  return grid == o.grid && kernel == o.kernel && convolution == o.convolution && model == o.model &&
         time == o.time && phi0 == o.phi0 && sigma0 == o.sigma0 && u0 == o.u0 && v0 == o.v0 &&
         cost == o.cost && box == o.box && scheme == o.scheme && optimizer == o.optimizer &&
         gradcheck == o.gradcheck && output == o.output && seed == o.seed;
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte);
    throw ConfigError({"parse error at line " + std::to_string(line) + ", column " + std::to_string(col) +
                       ": " + e.what()});
  }
  if (!root.is_object()) throw ConfigError({"top level must be a JSON object"});

  Reader r;
  RunConfig c;
  c.base_dir = base_dir;
  r.check_keys(root, "config", {"grid", "kernel", "model", "time", "initial", "controls", "cost", "box",
                                "solver", "optimizer", "gradcheck", "output", "seed"});

  if (const json* s = r.section(root, "grid", "config")) {
    r.check_keys(*s, "grid", {"dim", "cells", "extent"});
    r.get(s, "dim", c.grid.dim, "grid");
    for (const char* key : {"cells", "extent"}) {
      if (!s->contains(key)) continue;
      const json& a = (*s)[key];
      if (!a.is_array() || a.size() != static_cast<std::size_t>(c.grid.dim)) {
        r.error(std::string("grid.") + key, "expected an array with one entry per dimension");
        continue;
      }
      for (std::size_t k = 0; k < a.size(); ++k) {
        if (std::string(key) == "cells") {
          if (!a[k].is_number_integer()) r.error("grid.cells", "expected integers");
          else c.grid.cells[k] = a[k].get<int>();
        } else {
          if (!a[k].is_number()) r.error("grid.extent", "expected numbers");
          else c.grid.extent[k] = a[k].get<double>();
        }
      }
    }
    if (c.grid.dim == 1) {
      c.grid.cells[1] = 1;
      c.grid.extent[1] = 1.0;
    }
  }

  if (const json* s = r.section(root, "kernel", "config")) {
    r.check_keys(*s, "kernel", {"family", "amplitude", "width", "convolution"});
    r.get_enum(s, "family", c.kernel.family, kernel_family_from_string, "kernel");
    r.get(s, "amplitude", c.kernel.amplitude, "kernel");
    r.get(s, "width", c.kernel.width, "kernel");
    r.get_enum(s, "convolution", c.convolution, convolution_method_from_string, "kernel");
  }

  if (const json* s = r.section(root, "model", "config")) {
    r.check_keys(*s, "model", {"A", "B", "chi", "lambda_s", "potential", "proliferation", "distribution"});
    r.get(s, "A", c.model.A, "model");
    r.get(s, "B", c.model.B, "model");
    r.get(s, "chi", c.model.chi, "model");
    r.get(s, "lambda_s", c.model.lambda_s, "model");
    r.get_enum(s, "potential", c.model.potential, potential_from_string, "model");
    r.get_enum(s, "proliferation", c.model.proliferation, proliferation_from_string, "model");
    r.get_enum(s, "distribution", c.model.distribution, distribution_from_string, "model");
  }

  if (const json* s = r.section(root, "time", "config")) {
    r.check_keys(*s, "time", {"T", "steps"});
    r.get(s, "T", c.time.T, "time");
    r.get(s, "steps", c.time.steps, "time");
  }

  if (const json* s = r.section(root, "initial", "config")) {
    r.check_keys(*s, "initial", {"phi", "sigma"});
    r.field(s, "phi", c.phi0, "initial");
    r.field(s, "sigma", c.sigma0, "initial");
  }

  if (const json* s = r.section(root, "controls", "config")) {
    r.check_keys(*s, "controls", {"u", "v"});
    r.field(s, "u", c.u0, "controls");
    r.field(s, "v", c.v0, "controls");
  }

  if (const json* s = r.section(root, "cost", "config")) {
    r.check_keys(*s, "cost", {"alpha_Omega", "alpha_Q", "beta_Omega", "beta_Q", "alpha_u", "beta_v", "targets"});
    r.get(s, "alpha_Omega", c.cost.alpha_Omega, "cost");
    r.get(s, "alpha_Q", c.cost.alpha_Q, "cost");
    r.get(s, "beta_Omega", c.cost.beta_Omega, "cost");
    r.get(s, "beta_Q", c.cost.beta_Q, "cost");
    r.get(s, "alpha_u", c.cost.alpha_u, "cost");
    r.get(s, "beta_v", c.cost.beta_v, "cost");
    if (const json* t = r.section(*s, "targets", "cost")) {
      r.check_keys(*t, "cost.targets", {"type", "phi_Omega", "sigma_Omega", "phi_Q", "sigma_Q", "u", "v"});
      std::string type = "fields";
      r.get(t, "type", type, "cost.targets");
      if (type == "fields") c.cost.targets.kind = TargetConfig::Kind::fields;
      else if (type == "manufactured") c.cost.targets.kind = TargetConfig::Kind::manufactured;
      else r.error("cost.targets.type", "unknown target type '" + type + "' (fields | manufactured)");
      r.field(t, "phi_Omega", c.cost.targets.phi_Omega, "cost.targets");
      r.field(t, "sigma_Omega", c.cost.targets.sigma_Omega, "cost.targets");
      r.field(t, "phi_Q", c.cost.targets.phi_Q, "cost.targets");
      r.field(t, "sigma_Q", c.cost.targets.sigma_Q, "cost.targets");
      r.field(t, "u", c.cost.targets.u, "cost.targets");
      r.field(t, "v", c.cost.targets.v, "cost.targets");
    }
  }

  if (const json* s = r.section(root, "box", "config")) {
    r.check_keys(*s, "box", {"u_min", "u_max", "v_min", "v_max"});
    r.field(s, "u_min", c.box.u_min, "box");
    r.field(s, "u_max", c.box.u_max, "box");
    r.field(s, "v_min", c.box.v_min, "box");
    r.field(s, "v_max", c.box.v_max, "box");
  }

  if (const json* s = r.section(root, "solver", "config")) {
    r.check_keys(*s, "solver", {"linear_solver", "cg_tol", "cg_max_iter", "blowup_guard"});
    r.get_enum(s, "linear_solver", c.scheme.linear.kind, linear_solver_from_string, "solver");
    r.get(s, "cg_tol", c.scheme.linear.cg_tol, "solver");
    r.get(s, "cg_max_iter", c.scheme.linear.cg_max_iter, "solver");
    r.get(s, "blowup_guard", c.scheme.blowup_guard, "solver");
  }

  if (const json* s = r.section(root, "optimizer", "config")) {
    r.check_keys(*s, "optimizer", {"tol", "max_iter", "initial_step", "armijo"});
    r.get(s, "tol", c.optimizer.tol, "optimizer");
    r.get(s, "max_iter", c.optimizer.max_iter, "optimizer");
    r.get(s, "initial_step", c.optimizer.initial_step, "optimizer");
    r.get(s, "armijo", c.optimizer.armijo, "optimizer");
  }

  if (const json* s = r.section(root, "gradcheck", "config")) {
    r.check_keys(*s, "gradcheck", {"probes", "directions", "duality_tol", "fd_tol", "taylor_order_min"});
    r.get(s, "probes", c.gradcheck.probes, "gradcheck");
    r.get(s, "directions", c.gradcheck.directions, "gradcheck");
    r.get(s, "duality_tol", c.gradcheck.duality_tol, "gradcheck");
    r.get(s, "fd_tol", c.gradcheck.fd_tol, "gradcheck");
    r.get(s, "taylor_order_min", c.gradcheck.taylor_order_min, "gradcheck");
  }

  if (const json* s = r.section(root, "output", "config")) {
    r.check_keys(*s, "output", {"dir", "snapshot_stride"});
    r.get(s, "dir", c.output.dir, "output");
    r.get(s, "snapshot_stride", c.output.snapshot_stride, "output");
  }

  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned()) r.error("seed", "expected a non-negative integer");
    else c.seed = root["seed"].get<std::uint64_t>();
  }
  c.optimizer.scheme = c.scheme;

  validate_config(r, c);
  if (!r.errors.empty()) throw ConfigError(r.errors);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read config file " + path.string()});
  std::stringstream ss;
  ss << in.rdbuf();
  const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return parse_config(ss.str(), base);
}

std::string write_config(const RunConfig& c) {
  json j;
  j["grid"] = {{"dim", c.grid.dim}};
  json cells = json::array(), extent = json::array();
  for (int k = 0; k < c.grid.dim; ++k) {
    cells.push_back(c.grid.cells[k]);
    extent.push_back(c.grid.extent[k]);
  }
  j["grid"]["cells"] = cells;
  j["grid"]["extent"] = extent;
  j["kernel"] = {{"family", to_string(c.kernel.family)},
                 {"amplitude", c.kernel.amplitude},
                 {"width", c.kernel.width},
                 {"convolution", to_string(c.convolution)}};
  j["model"] = {{"A", c.model.A},
                {"B", c.model.B},
                {"chi", c.model.chi},
                {"lambda_s", c.model.lambda_s},
                {"potential", to_string(c.model.potential)},
                {"proliferation", to_string(c.model.proliferation)},
                {"distribution", to_string(c.model.distribution)}};
  j["time"] = {{"T", c.time.T}, {"steps", c.time.steps}};
  j["initial"] = {{"phi", field_json(c.phi0)}, {"sigma", field_json(c.sigma0)}};
  j["controls"] = {{"u", field_json(c.u0)}, {"v", field_json(c.v0)}};
  const auto& t = c.cost.targets;
  json targets = {{"type", t.kind == TargetConfig::Kind::fields ? "fields" : "manufactured"},
                  {"phi_Omega", field_json(t.phi_Omega)},
                  {"sigma_Omega", field_json(t.sigma_Omega)},
                  {"phi_Q", field_json(t.phi_Q)},
                  {"sigma_Q", field_json(t.sigma_Q)},
                  {"u", field_json(t.u)},
                  {"v", field_json(t.v)}};
  j["cost"] = {{"alpha_Omega", c.cost.alpha_Omega}, {"alpha_Q", c.cost.alpha_Q},
               {"beta_Omega", c.cost.beta_Omega},   {"beta_Q", c.cost.beta_Q},
               {"alpha_u", c.cost.alpha_u},         {"beta_v", c.cost.beta_v},
               {"targets", targets}};
  j["box"] = {{"u_min", field_json(c.box.u_min)},
              {"u_max", field_json(c.box.u_max)},
              {"v_min", field_json(c.box.v_min)},
              {"v_max", field_json(c.box.v_max)}};
  j["solver"] = {{"linear_solver", to_string(c.scheme.linear.kind)},
                 {"cg_tol", c.scheme.linear.cg_tol},
                 {"cg_max_iter", c.scheme.linear.cg_max_iter},
                 {"blowup_guard", c.scheme.blowup_guard}};
  j["optimizer"] = {{"tol", c.optimizer.tol},
                    {"max_iter", c.optimizer.max_iter},
                    {"initial_step", c.optimizer.initial_step},
                    {"armijo", c.optimizer.armijo}};
  j["gradcheck"] = {{"probes", c.gradcheck.probes},
                    {"directions", c.gradcheck.directions},
                    {"duality_tol", c.gradcheck.duality_tol},
                    {"fd_tol", c.gradcheck.fd_tol},
                    {"taylor_order_min", c.gradcheck.taylor_order_min}};
  j["output"] = {{"dir", c.output.dir}, {"snapshot_stride", c.output.snapshot_stride}};
  j["seed"] = c.seed;
  return j.dump(2) + "\n";
}

std::string config_hash(const RunConfig& config) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : write_config(config)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Problem build_problem(const RunConfig& c) {
  Problem p;
  std::vector<std::string> errors;
  try {
    p.grid = c.grid.make();
    p.kernel = build_kernel(c.kernel, p.grid, c.convolution);
    p.params = c.model;
    p.time = c.time;
    p.scheme = c.scheme;
    validate_hypotheses(p.params, p.kernel);
    p.ellipticity_margin = ellipticity_margin(p.params, p.kernel);
    const auto& base = c.base_dir;
    p.phi0 = c.phi0.materialize(p.grid, base);
    p.sigma0 = c.sigma0.materialize(p.grid, base);
    p.c0 = ControlPair::constant(c.u0.materialize(p.grid, base), c.v0.materialize(p.grid, base), c.time.steps);

    const auto steps = static_cast<std::size_t>(c.time.steps);
    BoxConstraints& b = p.box;
    b.u_min.assign(steps, c.box.u_min.materialize(p.grid, base));
    b.u_max.assign(steps, c.box.u_max.materialize(p.grid, base));
    b.v_min.assign(steps, c.box.v_min.materialize(p.grid, base));
    b.v_max.assign(steps, c.box.v_max.materialize(p.grid, base));
    validate(b, p.grid, c.time.steps);

    CostSpec& cs = p.cost;
    cs.alpha_Omega = c.cost.alpha_Omega;
    cs.alpha_Q = c.cost.alpha_Q;
    cs.beta_Omega = c.cost.beta_Omega;
    cs.beta_Q = c.cost.beta_Q;
    cs.alpha_u = c.cost.alpha_u;
    cs.beta_v = c.cost.beta_v;
    const auto& t = c.cost.targets;
    if (t.kind == TargetConfig::Kind::fields) {
      cs.phi_Omega = t.phi_Omega.materialize(p.grid, base);
      cs.sigma_Omega = t.sigma_Omega.materialize(p.grid, base);
      cs.phi_Q.assign(steps, t.phi_Q.materialize(p.grid, base));
      cs.sigma_Q.assign(steps, t.sigma_Q.materialize(p.grid, base));
    } else {
      const ControlPair star =
          ControlPair::constant(t.u.materialize(p.grid, base), t.v.materialize(p.grid, base), c.time.steps);
      const StateTrajectory ref = simulate(p.phi0, p.sigma0, star, p.params, p.kernel, p.time, p.scheme);
      cs.phi_Omega = ref.states.back().phi;
      cs.sigma_Omega = ref.states.back().sigma;
      for (std::size_t n = 0; n < steps; ++n) {
        cs.phi_Q.push_back(ref.states[n].phi);
        cs.sigma_Q.push_back(ref.states[n].sigma);
      }
    }
    validate(cs, p.grid, c.time.steps, false);
  } catch (const StepError&) {
    throw;
  } catch (const Error& e) {
    errors.push_back(e.what());
  }
  if (!errors.empty()) throw ConfigError(errors);
  return p;
}

}  // namespace nlch
