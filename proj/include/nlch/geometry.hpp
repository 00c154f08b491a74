#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace nlch {

/// Cell-centered rectangular grid on [0, L0] x [0, L1] (1D uses axis 0 only).
///
/// Cells are flattened row-major: index = i0 * cells(1) + i1, so the last
/// active axis is contiguous. Every module addresses fields through this
/// ordering.
class Grid {
 public:
  Grid() = default;

  static Grid line(int cells, double extent);
  static Grid rect(int cells0, int cells1, double extent0, double extent1);

  int dim() const { return dim_; }
  int cells(int axis) const { return cells_[axis]; }
  double extent(int axis) const { return extent_[axis]; }
  double spacing(int axis) const { return extent_[axis] / cells_[axis]; }
  std::size_t size() const {
    return static_cast<std::size_t>(cells_[0]) * static_cast<std::size_t>(cells_[1]);
  }
  double cell_volume() const;
  double measure() const;
  /// Stride between neighbours along `axis` in the flattened ordering.
  std::size_t stride(int axis) const { return axis == 0 ? static_cast<std::size_t>(cells_[1]) : 1; }
  /// Cell-center coordinate along `axis` of the cell with axis index i.
  double center(int axis, int i) const { return (i + 0.5) * spacing(axis); }
  std::array<int, 2> unflatten(std::size_t index) const;

  bool operator==(const Grid&) const = default;

 private:
  Grid(int dim, std::array<int, 2> cells, std::array<double, 2> extent);

  int dim_ = 1;
  std::array<int, 2> cells_{2, 1};
  std::array<double, 2> extent_{1.0, 1.0};
};

/// Real values per cell of a Grid.
class Field {
 public:
  Field() = default;
  explicit Field(const Grid& grid, double fill = 0.0);
  Field(const Grid& grid, std::vector<double> values);

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double s);
  /// this += s * x
  Field& axpy(double s, const Field& x);

  bool all_finite() const;

  /// Bitwise equality of grid and values.
  bool operator==(const Field&) const = default;

 private:
  Grid grid_;
  std::vector<double> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);
/// Pointwise product.
Field hadamard(const Field& a, const Field& b);

void require_same_grid(const Grid& a, const Grid& b, const char* where);

/// Discrete Laplacian with homogeneous Neumann closure (mirror ghost cells).
Field laplacian_neumann(const Field& f);
/// Same operator into a preallocated output.
void laplacian_neumann(const Field& f, Field& out);

/// Midpoint-quadrature L2 product: sum_i f_i g_i * cell_volume.
double inner_product(const Field& f, const Field& g);
/// Integral of f over the domain.
double mass(const Field& f);
double norm_l2(const Field& f);
double norm_linf(const Field& f);
/// Quadrature L1 norm, the natural scale for integrated cancellation checks.
double norm_l1(const Field& f);

namespace detail {
/// Sum of term(i) for i in [0, n), computed in fixed-size blocks so the
/// result is bitwise independent of the thread count.
template <typename Term>
double blocked_sum(std::size_t n, Term term);
}  // namespace detail

}  // namespace nlch

#include "nlch/detail/blocked_sum.hpp"
