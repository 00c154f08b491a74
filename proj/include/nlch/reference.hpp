#pragma once

// Serial reference implementations of the data-parallel kernels. They are
// written for clarity, not speed, and are kept so tests and the benchmark can
// compare the OpenMP kernels against them.

#include "nlch/geometry.hpp"
#include "nlch/kernels.hpp"

namespace nlch::reference {

/// Same stencil and operation order as nlch::laplacian_neumann; results match bitwise.
Field laplacian_neumann(const Field& f);

/// Plain double loop evaluating J(x_i - x_j) from the spec at every pair.
Field convolve(const KernelSpec& spec, const Field& f);

/// Single left-to-right sum.
double inner_product(const Field& f, const Field& g);

}  // namespace nlch::reference
