#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>

#include "nlch/geometry.hpp"
#include "nlch/kernels.hpp"
#include "nlch/reference.hpp"

using namespace nlch;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
  fn();
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

Field random_field(const Grid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Field f(g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = u(rng);
  return f;
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());
  std::printf("%-10s %-22s %12s %12s %9s %12s\n", "grid", "kernel", "openmp ms", "serial ms", "speedup", "max diff");
  std::mt19937_64 rng(7);
  for (int n : {32, 64, 128}) {
    const Grid g = Grid::rect(n, n, 1.0, 1.0);
    const Field f = random_field(g, rng);
    char label[32];
    std::snprintf(label, sizeof label, "%dx%d", n, n);

    Field a, b;
    const double lp = time_ms([&] { a = laplacian_neumann(f); }, 50);
    const double ls = time_ms([&] { b = reference::laplacian_neumann(f); }, 50);
    std::printf("%-10s %-22s %12.4f %12.4f %9.2f %12.3e\n", label, "laplacian", lp, ls, ls / lp, norm_linf(a - b));

    const KernelSpec spec{KernelFamily::gaussian, 1.0, 0.05};
    const KernelData kd = build_kernel(spec, g, ConvolutionMethod::direct);
    const KernelData kf = build_kernel(spec, g, ConvolutionMethod::fft);
    const int reps = n >= 128 ? 1 : 5;
    const double cs = time_ms([&] { b = reference::convolve(spec, f); }, reps);
    const double cd = time_ms([&] { a = convolve_direct(kd, f); }, reps);
    std::printf("%-10s %-22s %12.4f %12.4f %9.2f %12.3e\n", label, "convolve direct", cd, cs, cs / cd, norm_linf(a - b));
    const double cf = time_ms([&] { a = convolve_fft(kf, f); }, 20);
    std::printf("%-10s %-22s %12.4f %12.4f %9.2f %12.3e\n", label, "convolve fft", cf, cs, cs / cf, norm_linf(a - b));
  }
  return 0;
}
