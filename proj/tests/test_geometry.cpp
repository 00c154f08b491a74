#include <omp.h>

#include <cmath>
#include <numbers>

#include "doctest.h"
#include "helpers.hpp"
#include "nlch/errors.hpp"
#include "nlch/reference.hpp"

using namespace nlch;

TEST_CASE("grid construction and indexing") {
  CHECK_THROWS_AS(Grid::line(1, 1.0), InvalidGridError);
  CHECK_THROWS_AS(Grid::rect(4, 1, 1.0, 1.0), InvalidGridError);
  CHECK_THROWS_AS(Grid::line(8, 0.0), InvalidGridError);

  const Grid g = Grid::rect(4, 3, 2.0, 1.5);
  CHECK(g.size() == 12);
  CHECK(g.stride(0) == 3);
  CHECK(g.stride(1) == 1);
  CHECK(g.cell_volume() == doctest::Approx(0.25));
  CHECK(g.measure() == doctest::Approx(3.0));
  CHECK(g.center(0, 0) == doctest::Approx(0.25));
  const auto idx = g.unflatten(7);
  CHECK(idx[0] == 2);
  CHECK(idx[1] == 1);

  const Grid l = Grid::line(8, 1.0);
  CHECK(l.dim() == 1);
  CHECK(l.cells(1) == 1);
  CHECK(l.size() == 8);
}

TEST_CASE("field arithmetic rejects mismatched grids") {
  const Field a(Grid::line(4, 1.0), 1.0);
  const Field b(Grid::line(5, 1.0), 1.0);
  CHECK_THROWS_AS(a + b, ShapeError);
  CHECK_THROWS_AS(inner_product(a, b), ShapeError);
  CHECK_THROWS_AS(Field(Grid::line(4, 1.0), std::vector<double>(3)), ShapeError);
}

TEST_CASE("laplacian of a quadratic is exact in the interior") {
  const Grid g = Grid::line(16, 1.0);
  Field f(g);
  for (int i = 0; i < 16; ++i) f[i] = std::pow(g.center(0, i), 2);
  const Field lap = laplacian_neumann(f);
  for (int i = 1; i < 15; ++i) CHECK(lap[i] == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("laplacian converges at second order on a Neumann eigenfunction") {
  auto err = [](int n) {
    const Grid g = Grid::rect(n, n, 1.0, 1.0);
    Field f(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto ix = g.unflatten(i);
      f[i] = std::cos(std::numbers::pi * g.center(0, ix[0])) * std::cos(2 * std::numbers::pi * g.center(1, ix[1]));
    }
    Field lap = laplacian_neumann(f);
    lap.axpy(5.0 * std::numbers::pi * std::numbers::pi, f);
    return norm_linf(lap);
  };
  const double order = std::log2(err(32) / err(64));
  CHECK(order == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("laplacian conserves mass and is self-adjoint") {
  std::mt19937_64 rng(11);
  for (const Grid& g : {Grid::line(64, 1.0), Grid::rect(32, 32, 1.0, 1.0), Grid::rect(17, 9, 2.0, 0.5)}) {
    for (int k = 0; k < 10; ++k) {
      const Field f = testutil::random_field(g, rng);
      const Field h = testutil::random_field(g, rng);
      const Field lf = laplacian_neumann(f);
      const Field lh = laplacian_neumann(h);
      CHECK(std::abs(mass(lf)) <= 1e-13 * norm_l1(lf));
      const double lhs = inner_product(lf, h);
      const double rhs = inner_product(f, lh);
      CHECK(std::abs(lhs - rhs) <= 1e-12 * norm_l2(lf) * norm_l2(h));
    }
  }
}

TEST_CASE("parallel kernels match the serial reference bitwise") {
  std::mt19937_64 rng(3);
  const Grid g = Grid::rect(48, 40, 1.0, 1.0);
  const Field f = testutil::random_field(g, rng);
  const Field h = testutil::random_field(g, rng);
  CHECK(laplacian_neumann(f) == reference::laplacian_neumann(f));
  CHECK(inner_product(f, h) == doctest::Approx(reference::inner_product(f, h)).epsilon(1e-14));
}

TEST_CASE("reductions do not depend on the thread count") {
  std::mt19937_64 rng(5);
  const Grid g = Grid::rect(64, 64, 1.0, 1.0);
  const Field f = testutil::random_field(g, rng);
  const Field h = testutil::random_field(g, rng);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const double one = inner_product(f, h);
  const double m1 = mass(f);
  omp_set_num_threads(4);
  const double four = inner_product(f, h);
  const double m4 = mass(f);
  omp_set_num_threads(saved);
  CHECK(one == four);
  CHECK(m1 == m4);
}

TEST_CASE("norms") {
  const Grid g = Grid::line(4, 2.0);
  const Field f(g, std::vector<double>{1.0, -2.0, 3.0, -4.0});
  CHECK(mass(f) == doctest::Approx(-1.0));
  CHECK(norm_l1(f) == doctest::Approx(5.0));
  CHECK(norm_linf(f) == 4.0);
  CHECK(norm_l2(f) == doctest::Approx(std::sqrt(15.0)));
}
