#include "bard/kernels.hpp"

#include <cstdlib>
#include <string_view>

namespace bard::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(BARD_HAVE_AVX2_KERNEL) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelSet kScalar{"scalar", &mixture_scalar};
#if defined(BARD_HAVE_AVX2_KERNEL)
const KernelSet kAvx2{"avx2", &mixture_avx2};
#endif

const KernelSet& select() {
  if (const char* env = std::getenv("BARD_KERNEL"); env && std::string_view(env) == "scalar") return kScalar;
  if (const KernelSet* k = avx2()) return *k;
  return kScalar;
}

}  // namespace

const KernelSet& scalar() { return kScalar; }

const KernelSet* avx2() {
#if defined(BARD_HAVE_AVX2_KERNEL)
  static const bool ok = cpu_has_avx2();
  return ok ? &kAvx2 : nullptr;
#else
  return nullptr;
#endif
}

const KernelSet& active() {
  static const KernelSet& chosen = select();
  return chosen;
}

}  // namespace bard::kernels
