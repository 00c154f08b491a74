#pragma once

#include <memory>
#include <string>
#include <vector>

#include "nlch/geometry.hpp"

namespace nlch {

enum class LinearSolverKind { cholesky, cg };

std::string to_string(LinearSolverKind k);
LinearSolverKind linear_solver_from_string(const std::string& s);

struct LinearSolverOptions {
  LinearSolverKind kind = LinearSolverKind::cholesky;
  double cg_tol = 1e-10;
  int cg_max_iter = 0;  // 0 selects 10 * unknowns

  bool operator==(const LinearSolverOptions&) const = default;
};

struct CholeskyFactor;

/// M = diag(d) - c * laplacian_neumann with d > 0, c >= 0. M is symmetric
/// positive definite in the Euclidean product (uniform cells), so it is its
/// own transpose. The sparse Cholesky factor (natural ordering, so the fill
/// stays inside the band) is computed once at construction.
class ImplicitOperator {
 public:
  ImplicitOperator(Field diagonal, double c, LinearSolverOptions opts = {});

  const Grid& grid() const { return diag_.grid(); }
  Field apply(const Field& x) const;
  Field solve(const Field& rhs) const;

  /// CG iterations used by the last solve (0 for the direct path).
  int last_iterations() const { return last_iterations_; }

 private:
  Field solve_cg(const Field& rhs) const;

  Field diag_;
  double c_;
  LinearSolverOptions opts_;
  std::shared_ptr<const CholeskyFactor> factor_;
  mutable int last_iterations_ = 0;
};

}  // namespace nlch
