#pragma once

#include <complex>
#include <memory>
#include <string>
#include <vector>

#include "nlch/geometry.hpp"

namespace nlch {

enum class KernelFamily { gaussian, mollifier };

std::string to_string(KernelFamily f);
KernelFamily kernel_family_from_string(const std::string& s);

/// Radially symmetric, non-increasing interaction kernel J.
///   gaussian:  amplitude * exp(-|z|^2 / (2 width^2))
///   mollifier: amplitude * exp(-1 / (1 - |z/width|^2)) inside |z| < width, else 0
struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
  double amplitude = 1.0;
  double width = 0.1;

  double value(double r) const;
  /// |grad J| at distance r.
  double gradient_norm(double r) const;

  bool operator==(const KernelSpec&) const = default;
};

enum class ConvolutionMethod { automatic, direct, fft };

std::string to_string(ConvolutionMethod m);
ConvolutionMethod convolution_method_from_string(const std::string& s);

/// Kernel sampled on a grid, with a = J*1 and the bounds a*, b*.
/// Immutable after build_kernel.
struct KernelData {
  KernelSpec spec;
  Grid grid;
  Field a_field;
  double a_star = 0.0;
  double b_star = 0.0;
  /// Resolved by build_kernel: never automatic.
  ConvolutionMethod method = ConvolutionMethod::direct;

  /// J at every index offset, (2 n0 - 1) x (2 n1 - 1), offset (0,0) at the center.
  std::vector<double> offset_table;
  /// Spectrum of the zero-padded kernel for the FFT path.
  std::shared_ptr<const std::vector<std::complex<double>>> spectrum;

  double at_offset(int d0, int d1) const {
    const int w1 = 2 * grid.cells(1) - 1;
    return offset_table[static_cast<std::size_t>(d0 + grid.cells(0) - 1) * w1 +
                        static_cast<std::size_t>(d1 + grid.cells(1) - 1)];
  }
};

KernelData build_kernel(const KernelSpec& spec, const Grid& grid,
                        ConvolutionMethod method = ConvolutionMethod::automatic);

/// (J*f)_i = sum_j J(x_i - x_j) f_j * cell_volume, restricted to the domain.
Field convolve(const KernelData& k, const Field& f);
Field convolve_direct(const KernelData& k, const Field& f);
/// Zero-padded linear convolution via FFT; same operator as convolve_direct.
Field convolve_fft(const KernelData& k, const Field& f);

/// |<J*f, g> - <f, J*g>| / (1 + |<J*f, g>|)
double convolution_adjoint_check(const KernelData& k, const Field& f, const Field& g);

}  // namespace nlch
