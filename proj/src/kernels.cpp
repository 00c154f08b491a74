#include "nlch/kernels.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

#include "nlch/errors.hpp"

namespace nlch {

namespace {

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

constexpr std::size_t kDirectLimit = 4096;

struct PaddedShape {
  int p0;
  int p1;
  std::size_t real_size() const { return static_cast<std::size_t>(p0) * p1; }
  std::size_t complex_size() const { return static_cast<std::size_t>(p0) * (p1 / 2 + 1); }
};

PaddedShape padded_shape(const Grid& g) {
  return g.dim() == 2 ? PaddedShape{2 * g.cells(0), 2 * g.cells(1)} : PaddedShape{1, 2 * g.cells(0)};
}

// Forward real-to-complex transform of a padded array (treated as p0 x p1).
std::vector<std::complex<double>> forward_transform(std::vector<double> padded, PaddedShape s) {
  std::vector<std::complex<double>> out(s.complex_size());
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_r2c_2d(s.p0, s.p1, padded.data(),
                                reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

std::vector<double> inverse_transform(std::vector<std::complex<double>> spec, PaddedShape s) {
  std::vector<double> out(s.real_size());
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_c2r_2d(s.p0, s.p1, reinterpret_cast<fftw_complex*>(spec.data()),
                                out.data(), FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

}  // namespace

std::string to_string(KernelFamily f) {
  return f == KernelFamily::gaussian ? "gaussian" : "mollifier";
}

KernelFamily kernel_family_from_string(const std::string& s) {
  if (s == "gaussian") return KernelFamily::gaussian;
  if (s == "mollifier") return KernelFamily::mollifier;
  throw ValidationError("unknown kernel family '" + s + "'");
}

std::string to_string(ConvolutionMethod m) {
  switch (m) {
    case ConvolutionMethod::direct: return "direct";
    case ConvolutionMethod::fft: return "fft";
    default: return "auto";
  }
}

ConvolutionMethod convolution_method_from_string(const std::string& s) {
  if (s == "auto") return ConvolutionMethod::automatic;
  if (s == "direct") return ConvolutionMethod::direct;
  if (s == "fft") return ConvolutionMethod::fft;
  throw ValidationError("unknown convolution method '" + s + "'");
}

double KernelSpec::value(double r) const {
  if (family == KernelFamily::gaussian) return amplitude * std::exp(-r * r / (2.0 * width * width));
  const double s = r / width;
  if (s >= 1.0) return 0.0;
  return amplitude * std::exp(-1.0 / (1.0 - s * s));
}

double KernelSpec::gradient_norm(double r) const {
  if (family == KernelFamily::gaussian) return value(r) * r / (width * width);
  const double s = r / width;
  if (s >= 1.0) return 0.0;
  const double d = 1.0 - s * s;
  return value(r) * 2.0 * s / (d * d) / width;
}

KernelData build_kernel(const KernelSpec& spec, const Grid& grid, ConvolutionMethod method) {
  if (!(spec.amplitude > 0.0) || !std::isfinite(spec.amplitude))
    throw ValidationError("kernel amplitude must be positive");
  if (!(spec.width > 0.0) || !std::isfinite(spec.width))
    throw ValidationError("kernel width must be positive");
  double hmin = grid.spacing(0);
  if (grid.dim() == 2) hmin = std::min(hmin, grid.spacing(1));
  if (spec.width < 0.5 * hmin)
    throw UnderResolvedKernelError("kernel width " + std::to_string(spec.width) +
                                   " is below half the grid spacing " + std::to_string(hmin));

  KernelData k;
  k.spec = spec;
  k.grid = grid;
  if (method == ConvolutionMethod::automatic)
    method = grid.size() <= kDirectLimit ? ConvolutionMethod::direct : ConvolutionMethod::fft;
  k.method = method;

  const int n0 = grid.cells(0);
  const int n1 = grid.cells(1);
  const double h0 = grid.spacing(0);
  const double h1 = grid.dim() == 2 ? grid.spacing(1) : 0.0;
  const int w0 = 2 * n0 - 1;
  const int w1 = 2 * n1 - 1;
  std::vector<double> grad_table(static_cast<std::size_t>(w0) * w1);
  k.offset_table.resize(grad_table.size());
  for (int d0 = -(n0 - 1); d0 <= n0 - 1; ++d0) {
    for (int d1 = -(n1 - 1); d1 <= n1 - 1; ++d1) {
      const double r = std::hypot(d0 * h0, d1 * h1);
      const std::size_t at = static_cast<std::size_t>(d0 + n0 - 1) * w1 + (d1 + n1 - 1);
      k.offset_table[at] = spec.value(r);
      grad_table[at] = spec.gradient_norm(r);
    }
  }

  const PaddedShape s = padded_shape(grid);
  std::vector<double> padded(s.real_size(), 0.0);
  for (int d0 = -(n0 - 1); d0 <= n0 - 1; ++d0) {
    for (int d1 = -(n1 - 1); d1 <= n1 - 1; ++d1) {
      const int r0 = grid.dim() == 2 ? (d0 + s.p0) % s.p0 : 0;
      const int r1 = grid.dim() == 2 ? (d1 + s.p1) % s.p1 : (d0 + s.p1) % s.p1;
      padded[static_cast<std::size_t>(r0) * s.p1 + r1] = k.at_offset(d0, d1);
    }
  }
  k.spectrum = std::make_shared<const std::vector<std::complex<double>>>(
      forward_transform(std::move(padded), s));

  k.a_field = convolve_direct(k, Field(grid, 1.0));

  // a* and b* as sups over cell centers of the sampled integrals of |J|, |grad J|.
  const double vol = grid.cell_volume();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto [i0, i1] = grid.unflatten(i);
    double sa = 0.0;
    double sb = 0.0;
    for (int j0 = 0; j0 < n0; ++j0) {
      for (int j1 = 0; j1 < n1; ++j1) {
        const std::size_t at = static_cast<std::size_t>(i0 - j0 + n0 - 1) * w1 + (i1 - j1 + n1 - 1);
        sa += std::abs(k.offset_table[at]);
        sb += grad_table[at];
      }
    }
    k.a_star = std::max(k.a_star, sa * vol);
    k.b_star = std::max(k.b_star, sb * vol);
  }
  return k;
}

Field convolve_direct(const KernelData& k, const Field& f) {
  require_same_grid(k.grid, f.grid(), "convolve");
  const Grid& g = k.grid;
  const int n0 = g.cells(0);
  const int n1 = g.cells(1);
  const int w1 = 2 * n1 - 1;
  const double vol = g.cell_volume();
  const double* table = k.offset_table.data();
  const double* in = f.data();
  Field out(g);
  double* res = out.data();
  const auto n = static_cast<std::ptrdiff_t>(g.size());

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t s = 0; s < n; ++s) {
    const int i0 = static_cast<int>(s / n1);
    const int i1 = static_cast<int>(s % n1);
    double acc = 0.0;
    for (int j0 = 0; j0 < n0; ++j0) {
      const double* row = table + static_cast<std::size_t>(i0 - j0 + n0 - 1) * w1 + (i1 + n1 - 1);
      const double* fr = in + static_cast<std::size_t>(j0) * n1;
      for (int j1 = 0; j1 < n1; ++j1) acc += row[-j1] * fr[j1];
    }
    res[s] = acc * vol;
  }
  return out;
}

Field convolve_fft(const KernelData& k, const Field& f) {
  require_same_grid(k.grid, f.grid(), "convolve");
  const Grid& g = k.grid;
  const PaddedShape s = padded_shape(g);
  const int n0 = g.cells(0);
  const int n1 = g.cells(1);
  std::vector<double> padded(s.real_size(), 0.0);
  for (int j0 = 0; j0 < n0; ++j0)
    for (int j1 = 0; j1 < n1; ++j1)
      padded[g.dim() == 2 ? static_cast<std::size_t>(j0) * s.p1 + j1 : static_cast<std::size_t>(j0)] =
          f[static_cast<std::size_t>(j0) * n1 + j1];

  auto spec = forward_transform(std::move(padded), s);
  const auto& kern = *k.spectrum;
  for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= kern[i];
  const auto back = inverse_transform(std::move(spec), s);

  const double scale = g.cell_volume() / static_cast<double>(s.real_size());
  Field out(g);
  for (int i0 = 0; i0 < n0; ++i0)
    for (int i1 = 0; i1 < n1; ++i1)
      out[static_cast<std::size_t>(i0) * n1 + i1] =
          back[g.dim() == 2 ? static_cast<std::size_t>(i0) * s.p1 + i1 : static_cast<std::size_t>(i0)] *
          scale;
  return out;
}

Field convolve(const KernelData& k, const Field& f) {
  return k.method == ConvolutionMethod::fft ? convolve_fft(k, f) : convolve_direct(k, f);
}

double convolution_adjoint_check(const KernelData& k, const Field& f, const Field& g) {
  const double lhs = inner_product(convolve(k, f), g);
  const double rhs = inner_product(f, convolve(k, g));
  return std::abs(lhs - rhs) / (1.0 + std::abs(lhs));
}

}  // namespace nlch
