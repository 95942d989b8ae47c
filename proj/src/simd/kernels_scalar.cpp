#include "qrect/simd/kernels.hpp"

#include <cmath>

namespace qrect::simd {
namespace {

double wsum_scalar(const double* w, const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[i] * a[i];
  return s;
}

double wdot_scalar(const double* w, const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[i] * a[i] * b[i];
  return s;
}

double wsumsq_scalar(const double* w, const double* r, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[i] * r[i] * r[i];
  return s;
}

double maxabs_scalar(const double* r, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::fmax(m, std::fabs(r[i]));
  return m;
}

void affine_residual_scalar(const double* f, const double* cols, std::size_t dim,
                            const double* grad, double intercept, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = f[i] - intercept;
  for (std::size_t k = 0; k < dim; ++k) {
    const double g = grad[k];
    const double* col = cols + k * n;
    for (std::size_t i = 0; i < n; ++i) out[i] -= g * col[i];
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Isa::Scalar,   wsum_scalar,   wdot_scalar,
                                 wsumsq_scalar, maxabs_scalar, affine_residual_scalar};
  return table;
}

}  // namespace qrect::simd
