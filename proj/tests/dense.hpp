#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "nlch/geometry.hpp"
#include "nlch/kernels.hpp"

// Dense matrices for oracle computations.
namespace dense {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline Vector vec(const nlch::Field& f) {
  return Eigen::Map<const Vector>(f.data(), static_cast<Eigen::Index>(f.size()));
}

inline nlch::Field field(const nlch::Grid& g, const Vector& v) {
  return nlch::Field(g, std::vector<double>(v.data(), v.data() + v.size()));
}

inline Matrix laplacian(const nlch::Grid& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  Matrix L = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto idx = g.unflatten(i);
    for (int k = 0; k < g.dim(); ++k) {
      const double w = 1.0 / (g.spacing(k) * g.spacing(k));
      const auto s = static_cast<Eigen::Index>(g.stride(k));
      const auto r = static_cast<Eigen::Index>(i);
      if (idx[k] > 0) {
        L(r, r - s) += w;
        L(r, r) -= w;
      }
      if (idx[k] + 1 < g.cells(k)) {
        L(r, r + s) += w;
        L(r, r) -= w;
      }
    }
  }
  return L;
}

inline Matrix convolution(const nlch::KernelSpec& s, const nlch::Grid& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  Matrix J(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto a = g.unflatten(static_cast<std::size_t>(i)), b = g.unflatten(static_cast<std::size_t>(j));
      double r2 = 0.0;
      for (int k = 0; k < g.dim(); ++k) {
        const double d = g.center(k, a[k]) - g.center(k, b[k]);
        r2 += d * d;
      }
      J(i, j) = s.value(std::sqrt(r2)) * g.cell_volume();
    }
  return J;
}

inline Vector solve(const Matrix& M, const Vector& b) { return M.fullPivLu().solve(b); }

}  // namespace dense
