#include <atomic>
#include <cstdlib>
#include <string>

#include "ctstl/error.hpp"
#include "ctstl/simd/kernels.hpp"

namespace ctstl::simd {

#if defined(CTSTL_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(CTSTL_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") != 0;
  }();
  return supported;
#else
  return false;
#endif
}

Backend default_backend() {
  if (const char* env = std::getenv("CTSTL_SIMD"); env && std::string(env) == "scalar") {
    return Backend::Scalar;
  }
  return cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend>& active() {
  static std::atomic<Backend> backend{default_backend()};
  return backend;
}

}  // namespace

bool backend_available(Backend backend) {
  switch (backend) {
    case Backend::Scalar: return true;
    case Backend::Avx2: return cpu_has_avx2();
  }
  return false;
}

const KernelTable& kernels_for(Backend backend) {
  if (!backend_available(backend)) throw Error("requested SIMD backend is not available");
#if defined(CTSTL_HAVE_AVX2)
  if (backend == Backend::Avx2) return avx2_kernels();
#endif
  return scalar_kernels();
}

const KernelTable& kernels() { return kernels_for(active().load(std::memory_order_relaxed)); }

Backend active_backend() { return active().load(std::memory_order_relaxed); }

void select_backend(Backend backend) {
  if (!backend_available(backend)) throw Error("requested SIMD backend is not available");
  active().store(backend, std::memory_order_relaxed);
}

}  // namespace ctstl::simd
