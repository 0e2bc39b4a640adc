#include <atomic>
#include <cstdlib>
#include <string>

#include "kernels_internal.hpp"
#include "mudikit/error.hpp"

namespace mudikit::kernels {
namespace {

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(MUDIKIT_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(MUDIKIT_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable* best_table() {
  if (const char* pinned = std::getenv("MUDIKIT_SIMD")) {
    const std::string name(pinned);
    if (name == "scalar") return &scalar_table();
    if (name == "avx2" && cpu_supports(Isa::avx2)) return &table(Isa::avx2);
    if (name == "neon" && cpu_supports(Isa::neon)) return &table(Isa::neon);
  }
  if (cpu_supports(Isa::avx2)) return &table(Isa::avx2);
  if (cpu_supports(Isa::neon)) return &table(Isa::neon);
  return &scalar_table();
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{best_table()};
  return slot;
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
  }
  return "unknown";
}

bool isa_available(Isa isa) { return cpu_supports(isa); }

const KernelTable& table(Isa isa) {
  require(cpu_supports(isa), ErrorCode::parameter,
          "kernel variant not available: " + std::string(to_string(isa)));
  switch (isa) {
#if defined(MUDIKIT_HAVE_AVX2)
    case Isa::avx2:
      return avx2_table();
#endif
#if defined(MUDIKIT_HAVE_NEON)
    case Isa::neon:
      return neon_table();
#endif
    default:
      return scalar_table();
  }
}

const KernelTable& active() { return *active_slot().load(std::memory_order_relaxed); }

void force_isa(Isa isa) { active_slot().store(&table(isa), std::memory_order_relaxed); }

}  // namespace mudikit::kernels
