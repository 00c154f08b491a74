#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include "nlch/control.hpp"
#include "nlch/forward.hpp"
#include "nlch/geometry.hpp"
#include "nlch/kernels.hpp"

namespace testutil {

inline nlch::Field random_field(const nlch::Grid& g, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  nlch::Field f(g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = u(rng);
  return f;
}

inline nlch::ControlPair random_controls(const nlch::Grid& g, int steps, std::mt19937_64& rng,
                                         double scale = 1.0) {
  nlch::ControlPair c = nlch::ControlPair::zeros(g, steps);
  for (int n = 0; n < steps; ++n) {
    c.u[static_cast<std::size_t>(n)] = scale * random_field(g, rng);
    c.v[static_cast<std::size_t>(n)] = scale * random_field(g, rng);
  }
  return c;
}

inline nlch::Field bump(const nlch::Grid& g, double background, double amplitude, double width) {
  nlch::Field f(g, background);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto idx = g.unflatten(i);
    double r2 = 0.0;
    for (int k = 0; k < g.dim(); ++k) {
      const double d = g.center(k, idx[k]) - 0.5 * g.extent(k);
      r2 += d * d;
    }
    f[i] += amplitude * std::exp(-r2 / (2.0 * width * width));
  }
  return f;
}

// 1D desk problem: unit interval, Gaussian kernel with a ~ 1 in the interior.
inline nlch::KernelData desk_kernel(int cells = 32) {
  return nlch::build_kernel({nlch::KernelFamily::gaussian, 4.0, 0.1}, nlch::Grid::line(cells, 1.0));
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("nlch_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil
