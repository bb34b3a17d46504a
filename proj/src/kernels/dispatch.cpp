#include <atomic>
#include <cstdlib>
#include <string>

#include "besi/kernels.hpp"
#include "kernels_internal.hpp"

namespace besi::kernels {

const KernelTable* avx2_table() {
#if defined(BESI_HAVE_AVX2)
  return &detail::avx2_table_impl();
#else
  return nullptr;
#endif
}

bool cpu_supports_avx2() {
#if defined(BESI_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& table(SimdLevel level) {
  if (level == SimdLevel::scalar) return scalar_table();
  const KernelTable* t = avx2_table();
  if (t == nullptr || !cpu_supports_avx2())
    throw InvalidArgument("AVX2 kernels are not available on this build or CPU");
  return *t;
}

namespace {

SimdLevel initial_level() {
  const char* env = std::getenv("BESI_SIMD");
  const bool avx2_ok = avx2_table() != nullptr && cpu_supports_avx2();
  if (env != nullptr) {
    const std::string s(env);
    if (s == "scalar") return SimdLevel::scalar;
    if (s == "avx2" && avx2_ok) return SimdLevel::avx2;
  }
  return avx2_ok ? SimdLevel::avx2 : SimdLevel::scalar;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> ptr{&table(initial_level())};
  return ptr;
}

}  // namespace

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

SimdLevel active_level() { return active().level; }

void set_active_level(SimdLevel level) {
  current().store(&table(level), std::memory_order_release);
}

std::string_view level_name(SimdLevel level) {
  return level == SimdLevel::avx2 ? "avx2" : "scalar";
}

}  // namespace besi::kernels
