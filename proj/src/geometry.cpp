#include "nlch/geometry.hpp"

#include <cmath>
#include <string>

#include "nlch/errors.hpp"

namespace nlch {

Grid::Grid(int dim, std::array<int, 2> cells, std::array<double, 2> extent)
    : dim_(dim), cells_(cells), extent_(extent) {
  for (int k = 0; k < dim_; ++k) {
    if (cells_[k] < 2)
      throw InvalidGridError("grid needs at least 2 cells per axis, axis " + std::to_string(k) +
                             " has " + std::to_string(cells_[k]));
    if (!(extent_[k] > 0.0) || !std::isfinite(extent_[k]))
      throw InvalidGridError("grid extent must be positive and finite on axis " +
                             std::to_string(k));
  }
}

Grid Grid::line(int cells, double extent) { return Grid(1, {cells, 1}, {extent, 1.0}); }

Grid Grid::rect(int cells0, int cells1, double extent0, double extent1) {
  return Grid(2, {cells0, cells1}, {extent0, extent1});
}

double Grid::cell_volume() const {
  double v = spacing(0);
  if (dim_ == 2) v *= spacing(1);
  return v;
}

double Grid::measure() const { return dim_ == 2 ? extent_[0] * extent_[1] : extent_[0]; }

std::array<int, 2> Grid::unflatten(std::size_t index) const {
  const auto n1 = static_cast<std::size_t>(cells_[1]);
  return {static_cast<int>(index / n1), static_cast<int>(index % n1)};
}

Field::Field(const Grid& grid, double fill) : grid_(grid), values_(grid.size(), fill) {}

Field::Field(const Grid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    throw ShapeError("field has " + std::to_string(values_.size()) + " values but grid has " +
                     std::to_string(grid_.size()) + " cells");
}

Field& Field::operator+=(const Field& other) {
  require_same_grid(grid_, other.grid_, "Field::operator+=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  require_same_grid(grid_, other.grid_, "Field::operator-=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

Field& Field::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

Field& Field::axpy(double s, const Field& x) {
  require_same_grid(grid_, x.grid_, "Field::axpy");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += s * x.values_[i];
  return *this;
}

bool Field::all_finite() const {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

Field hadamard(const Field& a, const Field& b) {
  require_same_grid(a.grid(), b.grid(), "hadamard");
  Field out(a.grid());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

void require_same_grid(const Grid& a, const Grid& b, const char* where) {
  if (!(a == b)) throw ShapeError(std::string(where) + ": grid mismatch");
}

void laplacian_neumann(const Field& f, Field& out) {
  const Grid& g = f.grid();
  if (!(out.grid() == g)) out = Field(g);
  const double* in = f.data();
  double* res = out.data();
  const std::size_t n = g.size();
  const int dim = g.dim();
  std::array<double, 2> inv_h2{};
  std::array<int, 2> cells{};
  std::array<std::size_t, 2> stride{};
  for (int k = 0; k < 2; ++k) {
    inv_h2[k] = 1.0 / (g.spacing(k) * g.spacing(k));
    cells[k] = g.cells(k);
    stride[k] = g.stride(k);
  }

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(n); ++s) {
    const auto i = static_cast<std::size_t>(s);
    const std::array<int, 2> idx{static_cast<int>(i / stride[0]), static_cast<int>(i % stride[0])};
    const double c = in[i];
    double acc = 0.0;
    for (int k = 0; k < dim; ++k) {
      // Mirror ghost: the missing neighbour equals the cell itself, so the
      // boundary face flux is exactly zero.
      const double lo = idx[k] > 0 ? in[i - stride[k]] : c;
      const double hi = idx[k] + 1 < cells[k] ? in[i + stride[k]] : c;
      acc += ((hi - c) - (c - lo)) * inv_h2[k];
    }
    res[i] = acc;
  }
}

Field laplacian_neumann(const Field& f) {
  Field out(f.grid());
  laplacian_neumann(f, out);
  return out;
}

double inner_product(const Field& f, const Field& g) {
  require_same_grid(f.grid(), g.grid(), "inner_product");
  const double* a = f.data();
  const double* b = g.data();
  return detail::blocked_sum(f.size(), [&](std::size_t i) { return a[i] * b[i]; }) *
         f.grid().cell_volume();
}

double mass(const Field& f) {
  const double* a = f.data();
  return detail::blocked_sum(f.size(), [&](std::size_t i) { return a[i]; }) *
         f.grid().cell_volume();
}

double norm_l2(const Field& f) { return std::sqrt(inner_product(f, f)); }

double norm_linf(const Field& f) {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

double norm_l1(const Field& f) {
  const double* a = f.data();
  return detail::blocked_sum(f.size(), [&](std::size_t i) { return std::abs(a[i]); }) *
         f.grid().cell_volume();
}

}  // namespace nlch
