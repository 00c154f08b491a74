#include "nlch/reference.hpp"

#include <cmath>

namespace nlch::reference {

Field laplacian_neumann(const Field& f) {
  const Grid& g = f.grid();
  Field out(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto idx = g.unflatten(i);
    const double c = f[i];
    double acc = 0.0;
    for (int k = 0; k < g.dim(); ++k) {
      const double lo = idx[k] > 0 ? f[i - g.stride(k)] : c;
      const double hi = idx[k] + 1 < g.cells(k) ? f[i + g.stride(k)] : c;
      acc += ((hi - c) - (c - lo)) * (1.0 / (g.spacing(k) * g.spacing(k)));
    }
    out[i] = acc;
  }
  return out;
}

Field convolve(const KernelSpec& spec, const Field& f) {
  const Grid& g = f.grid();
  Field out(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto a = g.unflatten(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      const auto b = g.unflatten(j);
      double r2 = 0.0;
      for (int k = 0; k < g.dim(); ++k) {
        const double d = g.center(k, a[k]) - g.center(k, b[k]);
        r2 += d * d;
      }
      acc += spec.value(std::sqrt(r2)) * f[j];
    }
    out[i] = acc * g.cell_volume();
  }
  return out;
}

double inner_product(const Field& f, const Field& g) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * g[i];
  return s * f.grid().cell_volume();
}

}  // namespace nlch::reference
