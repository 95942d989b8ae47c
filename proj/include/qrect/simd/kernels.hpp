#pragma once
// Weighted reduction kernels used by every fit in the library.
//
// Each kernel has a scalar reference implementation and, where the target
// supports it, an AVX2+FMA (x86-64) or NEON (aarch64) variant. The variant is
// picked once at runtime from the CPU feature bits; QRECT_ISA=scalar in the
// environment (or set_isa) forces the reference path. Vector variants reorder
// the floating-point reductions, so results agree with the reference to
// rounding, not bit-for-bit.

#include <cstddef>
#include <span>
#include <string_view>

namespace qrect::simd {

enum class Isa { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa);

struct KernelTable {
  Isa isa;
  // sum_i w[i]*a[i]
  double (*wsum)(const double* w, const double* a, std::size_t n);
  // sum_i w[i]*a[i]*b[i]
  double (*wdot)(const double* w, const double* a, const double* b, std::size_t n);
  // sum_i w[i]*r[i]^2
  double (*wsumsq)(const double* w, const double* r, std::size_t n);
  // max_i |r[i]|, 0 for n == 0
  double (*maxabs)(const double* r, std::size_t n);
  // out[i] = f[i] - intercept - sum_k grad[k]*cols[k*n + i]
  void (*affine_residual)(const double* f, const double* cols, std::size_t dim,
                          const double* grad, double intercept, double* out, std::size_t n);
};

const KernelTable& scalar_kernels();
/// nullptr when the variant is not compiled in or the CPU lacks the features.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

/// Kernel table in use. Selected on first call.
const KernelTable& kernels();

/// Forces a specific table; returns false (and changes nothing) if the ISA is
/// unavailable on this machine.
bool set_isa(Isa isa);

/// Best ISA available on this machine.
Isa detect_isa();

// Span conveniences over the active table.
inline double wsum(std::span<const double> w, std::span<const double> a) {
  return kernels().wsum(w.data(), a.data(), w.size());
}
inline double wdot(std::span<const double> w, std::span<const double> a,
                   std::span<const double> b) {
  return kernels().wdot(w.data(), a.data(), b.data(), w.size());
}
inline double wsumsq(std::span<const double> w, std::span<const double> r) {
  return kernels().wsumsq(w.data(), r.data(), w.size());
}
inline double maxabs(std::span<const double> r) { return kernels().maxabs(r.data(), r.size()); }

}  // namespace qrect::simd
