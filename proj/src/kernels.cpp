#include "rvts/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace rvts::kernels {

namespace {

bool host_has_avx2() noexcept {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const Table& select() noexcept {
  const char* env = std::getenv("RVTS_SIMD");
  const bool force_scalar = env != nullptr && std::strcmp(env, "scalar") == 0;
  if (!force_scalar) {
    if (const Table* t = avx2_table()) return *t;
  }
  return scalar_table();
}

}  // namespace

const Table& scalar_table() noexcept { return detail::make_scalar_table(); }

const Table* avx2_table() noexcept {
  static const Table* table = host_has_avx2() ? detail::make_avx2_table() : nullptr;
  return table;
}

const Table& active() noexcept {
  static const Table& table = select();
  return table;
}

const char* isa_name(Isa isa) noexcept { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

}  // namespace rvts::kernels
