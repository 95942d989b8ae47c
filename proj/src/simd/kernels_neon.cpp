#include "qrect/simd/kernels.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>

#include <cmath>

namespace qrect::simd {
namespace {

double wsum_neon(const double* w, const double* a, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(w + i), vld1q_f64(a + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(w + i + 2), vld1q_f64(a + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += w[i] * a[i];
  return s;
}

double wdot_neon(const double* w, const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vmulq_f64(vld1q_f64(w + i), vld1q_f64(a + i)), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vmulq_f64(vld1q_f64(w + i + 2), vld1q_f64(a + i + 2)),
                     vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += w[i] * a[i] * b[i];
  return s;
}

double wsumsq_neon(const double* w, const double* r, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float64x2_t r0 = vld1q_f64(r + i);
    const float64x2_t r1 = vld1q_f64(r + i + 2);
    acc0 = vfmaq_f64(acc0, vmulq_f64(vld1q_f64(w + i), r0), r0);
    acc1 = vfmaq_f64(acc1, vmulq_f64(vld1q_f64(w + i + 2), r1), r1);
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += w[i] * r[i] * r[i];
  return s;
}

double maxabs_neon(const double* r, std::size_t n) {
  float64x2_t m = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) m = vmaxq_f64(m, vabsq_f64(vld1q_f64(r + i)));
  double out = vmaxvq_f64(m);
  for (; i < n; ++i) out = std::fmax(out, std::fabs(r[i]));
  return out;
}

void affine_residual_neon(const double* f, const double* cols, std::size_t dim,
                          const double* grad, double intercept, double* out, std::size_t n) {
  const float64x2_t b = vdupq_n_f64(intercept);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t acc = vsubq_f64(vld1q_f64(f + i), b);
    for (std::size_t k = 0; k < dim; ++k)
      acc = vfmsq_f64(acc, vdupq_n_f64(grad[k]), vld1q_f64(cols + k * n + i));
    vst1q_f64(out + i, acc);
  }
  for (; i < n; ++i) {
    double v = f[i] - intercept;
    for (std::size_t k = 0; k < dim; ++k) v -= grad[k] * cols[k * n + i];
    out[i] = v;
  }
}

}  // namespace

const KernelTable* neon_kernels() {
  static const KernelTable table{Isa::Neon,   wsum_neon,   wdot_neon,
                                 wsumsq_neon, maxabs_neon, affine_residual_neon};
  return &table;
}

}  // namespace qrect::simd

#else

namespace qrect::simd {
const KernelTable* neon_kernels() { return nullptr; }
}  // namespace qrect::simd

#endif
