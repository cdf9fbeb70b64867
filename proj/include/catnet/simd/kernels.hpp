#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Data-parallel inner loops. Each primitive has a scalar reference
// implementation and, where the target supports it, an AVX2+FMA variant.
// The active table is chosen once at startup from CPUID; set
// CATNET_SIMD=scalar to force the reference path.

namespace catnet::simd {

struct KernelTable {
  std::string_view name;
  /// sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// y[r] += sum_c w[r * cols + c] * x[c]   (w row-major, rows x cols)
  void (*gemv)(const double* w, std::size_t rows, std::size_t cols, const double* x, double* y);
  /// y[r] += sum_c w[c * rows + r] * x[c]   (w^T x for the same row-major w, w is cols x rows)
  void (*gemv_t)(const double* w, std::size_t rows, std::size_t cols, const double* x, double* y);
  /// y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  /// out[i] = (x[i] - c)^2
  void (*sq_diff)(const double* x, double c, double* out, std::size_t n);
};

const KernelTable& scalar_kernels();
/// nullptr when the build or the CPU lacks AVX2.
const KernelTable* avx2_kernels();
/// The table selected for this process.
const KernelTable& active();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), x.size());
}

}  // namespace catnet::simd
