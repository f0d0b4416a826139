#include "webnav/kernels.hpp"

#include <cstdlib>
#include <string>

namespace webnav::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

const KernelTable* select_table() {
  if (const char* env = std::getenv("WEBNAV_KERNELS")) {
    if (std::string(env) == "scalar") return &scalar_table();
  }
  if (const KernelTable* t = avx2_table()) return t;
  if (const KernelTable* t = neon_table()) return t;
  return &scalar_table();
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{"scalar", &dot_scalar, &axpy_scalar};
  return table;
}

const KernelTable& active() {
  static const KernelTable* table = select_table();
  return *table;
}

void gemv_add(std::span<const double> w, std::size_t rows, std::size_t cols,
              std::span<const double> x, std::span<double> y) {
  const KernelTable& k = active();
  for (std::size_t i = 0; i < rows; ++i) {
    y[i] += k.dot(w.data() + i * cols, x.data(), cols);
  }
}

void gemv_t_add(std::span<const double> w, std::size_t rows, std::size_t cols,
                std::span<const double> g, std::span<double> y) {
  const KernelTable& k = active();
  for (std::size_t i = 0; i < rows; ++i) {
    if (g[i] != 0.0) k.axpy(g[i], w.data() + i * cols, y.data(), cols);
  }
}

void outer_add(std::span<const double> g, std::span<const double> x,
               std::span<double> w) {
  const KernelTable& k = active();
  const std::size_t cols = x.size();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] != 0.0) k.axpy(g[i], x.data(), w.data() + i * cols, cols);
  }
}

}  // namespace webnav::kernels
