#include "geoprog/kernels.hpp"

#include <atomic>

namespace geoprog::kernels {

const Ops* avx2_ops_impl();  // defined in kernels_avx2.cpp (null off-x86)

const Ops* avx2_ops() {
#if defined(__x86_64__) || defined(_M_X64)
  static const Ops* ops = __builtin_cpu_supports("avx2") ? avx2_ops_impl() : nullptr;
  return ops;
#else
  return nullptr;
#endif
}

namespace {
std::atomic<const Ops*> g_active{nullptr};
}

const Ops& active() {
  const Ops* ops = g_active.load(std::memory_order_acquire);
  if (!ops) {
    ops = avx2_ops();
    if (!ops) ops = &scalar_ops();
    g_active.store(ops, std::memory_order_release);
  }
  return *ops;
}

void set_active(const Ops& ops) { g_active.store(&ops, std::memory_order_release); }

}  // namespace geoprog::kernels
