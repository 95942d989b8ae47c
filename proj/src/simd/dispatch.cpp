#include <atomic>
#include <cstdlib>
#include <string>

#include "qrect/simd/kernels.hpp"

namespace qrect::simd {
namespace {

const KernelTable* table_for(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return &scalar_kernels();
    case Isa::Avx2: return avx2_kernels();
    case Isa::Neon: return neon_kernels();
  }
  return nullptr;
}

const KernelTable* initial_table() {
  if (const char* env = std::getenv("QRECT_ISA")) {
    const std::string want(env);
    if (want == "scalar") return &scalar_kernels();
    if (want == "avx2" && avx2_kernels()) return avx2_kernels();
    if (want == "neon" && neon_kernels()) return neon_kernels();
  }
  return table_for(detect_isa());
}

std::atomic<const KernelTable*>& active() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

Isa detect_isa() {
  if (avx2_kernels()) return Isa::Avx2;
  if (neon_kernels()) return Isa::Neon;
  return Isa::Scalar;
}

const KernelTable& kernels() { return *active().load(std::memory_order_acquire); }

bool set_isa(Isa isa) {
  const KernelTable* t = table_for(isa);
  if (!t) return false;
  active().store(t, std::memory_order_release);
  return true;
}

}  // namespace qrect::simd
