#include "dense.hpp"
#include "doctest.h"
#include "helpers.hpp"
#include "nlch/errors.hpp"
#include "nlch/linalg.hpp"

using namespace nlch;

TEST_CASE("implicit operator solves against a dense LU oracle") {
  std::mt19937_64 rng(4);
  for (const Grid& g : {Grid::line(40, 1.0), Grid::rect(9, 7, 1.0, 0.8)}) {
    const Field d = testutil::random_field(g, rng, 0.2, 2.0);
    const double c = 0.013;
    const Field b = testutil::random_field(g, rng);

    const dense::Matrix M = dense::Matrix(dense::vec(d).asDiagonal()) -
                            c * dense::laplacian(g);
    const Field expect = dense::field(g, dense::solve(M, dense::vec(b)));

    for (auto kind : {LinearSolverKind::cholesky, LinearSolverKind::cg}) {
      const ImplicitOperator op(d, c, {kind, 1e-13, 0});
      const Field x = op.solve(b);
      CHECK(norm_linf(x - expect) <= 1e-10 * norm_linf(expect));
      CHECK(norm_linf(op.apply(x) - dense::field(g, M * dense::vec(x))) <= 1e-12 * norm_linf(b));
      if (kind == LinearSolverKind::cg) CHECK(op.last_iterations() > 0);
      else CHECK(op.last_iterations() == 0);
    }
  }
}

TEST_CASE("operator with c = 0 is the diagonal") {
  const Grid g = Grid::line(8, 1.0);
  const ImplicitOperator op(Field(g, 4.0), 0.0);
  const Field x = op.solve(Field(g, 2.0));
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(x[i] == 0.5);
}

TEST_CASE("invalid operators and non-converging CG are reported") {
  const Grid g = Grid::rect(16, 16, 1.0, 1.0);
  CHECK_THROWS_AS(ImplicitOperator(Field(g, -1.0), 0.1), ValidationError);
  CHECK_THROWS_AS(ImplicitOperator(Field(g, 1.0), -0.1), ValidationError);
  std::mt19937_64 rng(1);
  const ImplicitOperator op(Field(g, 1.0), 1.0, {LinearSolverKind::cg, 1e-14, 2});
  try {
    op.solve(testutil::random_field(g, rng));
    FAIL("expected a solver error");
  } catch (const SolverError& e) {
    CHECK(e.iterations == 2);
    CHECK(e.residual > 1e-14);
  }
}

TEST_CASE("solver names round-trip") {
  for (auto k : {LinearSolverKind::cholesky, LinearSolverKind::cg}) CHECK(linear_solver_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(linear_solver_from_string("gmres"), ValidationError);
}
