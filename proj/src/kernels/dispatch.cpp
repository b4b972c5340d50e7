#include <atomic>
#include <cstdlib>
#include <string_view>

#include "cduap/kernels.hpp"

namespace cduap::kernels {

#ifdef CDUAP_HAVE_AVX2
const KernelTable& avx2_table_unchecked();
#endif

namespace {

#ifdef CDUAP_HAVE_AVX2
bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}
#endif

const KernelTable* select_initial() {
  const KernelTable* simd = avx2_table();
  if (const char* env = std::getenv("CDUAP_KERNELS")) {
    const std::string_view want(env);
    if (want == "scalar") return &scalar_table();
    if (want == "avx2" && simd) return simd;
  }
  return simd ? simd : &scalar_table();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{select_initial()};
  return table;
}

}  // namespace

const KernelTable* avx2_table() {
#ifdef CDUAP_HAVE_AVX2
  if (cpu_has_avx2()) return &avx2_table_unchecked();
#endif
  return nullptr;
}

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

std::vector<const KernelTable*> available() {
  std::vector<const KernelTable*> out{&scalar_table()};
  if (const KernelTable* simd = avx2_table()) out.push_back(simd);
  return out;
}

void set_active(const KernelTable& table) { current().store(&table, std::memory_order_relaxed); }

}  // namespace cduap::kernels
