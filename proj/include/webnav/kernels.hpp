#pragma once
// Dense double-precision kernels used by the policy network.
//
// Each kernel has a portable scalar reference and, where the CPU supports
// it, a vectorized variant (AVX2+FMA on x86-64, NEON on AArch64). The
// variant is picked once at startup; WEBNAV_KERNELS=scalar forces the
// reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace webnav::kernels {

struct KernelTable {
  std::string_view name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
};

const KernelTable& scalar_table();
// nullptr when the variant is not compiled in or not supported by this CPU.
const KernelTable* avx2_table();
const KernelTable* neon_table();

const KernelTable& active();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

// y[i] += sum_j w[i*cols + j] * x[j]
void gemv_add(std::span<const double> w, std::size_t rows, std::size_t cols,
              std::span<const double> x, std::span<double> y);

// y[j] += sum_i w[i*cols + j] * g[i]
void gemv_t_add(std::span<const double> w, std::size_t rows, std::size_t cols,
                std::span<const double> g, std::span<double> y);

// w[i*cols + j] += g[i] * x[j]
void outer_add(std::span<const double> g, std::span<const double> x,
               std::span<double> w);

}  // namespace webnav::kernels
