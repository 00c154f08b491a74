#include "nlch/linalg.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <memory>

#include "nlch/errors.hpp"

namespace nlch {

std::string to_string(LinearSolverKind k) {
  return k == LinearSolverKind::cg ? "cg" : "cholesky";
}

LinearSolverKind linear_solver_from_string(const std::string& s) {
  if (s == "cg") return LinearSolverKind::cg;
  if (s == "cholesky") return LinearSolverKind::cholesky;
  throw ValidationError("unknown linear solver '" + s + "'");
}

struct CholeskyFactor {
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::NaturalOrdering<int>> llt;
};

ImplicitOperator::ImplicitOperator(Field diagonal, double c, LinearSolverOptions opts)
    : diag_(std::move(diagonal)), c_(c), opts_(opts) {
  for (double d : diag_.values())
    if (!(d > 0.0) || !std::isfinite(d))
      throw ValidationError("implicit operator needs a positive finite diagonal");
  if (!(c_ >= 0.0)) throw ValidationError("implicit operator needs c >= 0");
  if (opts_.kind != LinearSolverKind::cholesky) return;

  const Grid& g = diag_.grid();
  const auto n = static_cast<int>(g.size());
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(g.size() * (1 + 2 * static_cast<std::size_t>(g.dim())));
  for (std::size_t j = 0; j < g.size(); ++j) {
    const auto idx = g.unflatten(j);
    double d = diag_[j];
    for (int k = 0; k < g.dim(); ++k) {
      const double w = c_ / (g.spacing(k) * g.spacing(k));
      if (idx[k] > 0) {
        d += w;
        entries.emplace_back(static_cast<int>(j), static_cast<int>(j - g.stride(k)), -w);
      }
      if (idx[k] + 1 < g.cells(k)) {
        d += w;
        entries.emplace_back(static_cast<int>(j), static_cast<int>(j + g.stride(k)), -w);
      }
    }
    entries.emplace_back(static_cast<int>(j), static_cast<int>(j), d);
  }
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(entries.begin(), entries.end());
  auto f = std::make_shared<CholeskyFactor>();
  f->llt.compute(m);
  if (f->llt.info() != Eigen::Success) throw SolverError("Cholesky factorisation failed", 0, 0.0);
  factor_ = std::move(f);
}

Field ImplicitOperator::apply(const Field& x) const {
  require_same_grid(grid(), x.grid(), "ImplicitOperator::apply");
  Field out = laplacian_neumann(x);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = diag_[i] * x[i] - c_ * out[i];
  return out;
}

Field ImplicitOperator::solve(const Field& rhs) const {
  require_same_grid(grid(), rhs.grid(), "ImplicitOperator::solve");
  if (opts_.kind == LinearSolverKind::cg) return solve_cg(rhs);
  Field x(rhs.grid());
  const auto n = static_cast<Eigen::Index>(rhs.size());
  Eigen::Map<Eigen::VectorXd>(x.data(), n) = factor_->llt.solve(Eigen::Map<const Eigen::VectorXd>(rhs.data(), n));
  last_iterations_ = 0;
  return x;
}

// Jacobi-preconditioned CG. Dot products go through blocked_sum, so the
// iterates do not depend on the thread count.
Field ImplicitOperator::solve_cg(const Field& rhs) const {
  const Grid& g = grid();
  const std::size_t n = g.size();
  const int max_iter = opts_.cg_max_iter > 0 ? opts_.cg_max_iter : static_cast<int>(10 * n);
  auto dot = [n](const Field& a, const Field& b) {
    return detail::blocked_sum(n, [&](std::size_t i) { return a[i] * b[i]; });
  };

  Field precond(g);
  for (std::size_t i = 0; i < n; ++i) {
    const auto idx = g.unflatten(i);
    double d = diag_[i];
    for (int k = 0; k < g.dim(); ++k) {
      const double w = c_ / (g.spacing(k) * g.spacing(k));
      if (idx[k] > 0) d += w;
      if (idx[k] + 1 < g.cells(k)) d += w;
    }
    precond[i] = 1.0 / d;
  }

  Field x(g);
  Field r = rhs;
  const double rhs_norm = std::sqrt(dot(rhs, rhs));
  last_iterations_ = 0;
  if (rhs_norm == 0.0) return x;
  Field z = hadamard(precond, r);
  Field p = z;
  double rz = dot(r, z);
  for (int it = 1; it <= max_iter; ++it) {
    const Field q = apply(p);
    const double alpha = rz / dot(p, q);
    x.axpy(alpha, p);
    r.axpy(-alpha, q);
    const double res = std::sqrt(dot(r, r));
    if (res <= opts_.cg_tol * rhs_norm) {
      last_iterations_ = it;
      return x;
    }
    z = hadamard(precond, r);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw SolverError("conjugate gradient did not converge in " + std::to_string(max_iter) +
                        " iterations",
                    max_iter, std::sqrt(dot(r, r)) / rhs_norm);
}

}  // namespace nlch
