#include "bof/kernels.hpp"

namespace bof::kernels {

bool supported(SimdLevel level) {
  switch (level) {
    case SimdLevel::kScalar:
      return true;
    case SimdLevel::kAvx2:
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case SimdLevel::kNeon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

SquaredL2Fn squared_l2_for(SimdLevel level) {
  if (!supported(level)) return nullptr;
  switch (level) {
    case SimdLevel::kScalar:
      return &squared_l2_scalar;
    case SimdLevel::kAvx2:
#if defined(__x86_64__) || defined(_M_X64)
      return &squared_l2_avx2;
#else
      return nullptr;
#endif
    case SimdLevel::kNeon:
#if defined(__aarch64__)
      return &squared_l2_neon;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

SimdLevel active_level() {
  static const SimdLevel level = [] {
    if (supported(SimdLevel::kAvx2)) return SimdLevel::kAvx2;
    if (supported(SimdLevel::kNeon)) return SimdLevel::kNeon;
    return SimdLevel::kScalar;
  }();
  return level;
}

std::string_view level_name(SimdLevel level) {
  switch (level) {
    case SimdLevel::kScalar:
      return "scalar";
    case SimdLevel::kAvx2:
      return "avx2";
    case SimdLevel::kNeon:
      return "neon";
  }
  return "unknown";
}

}  // namespace bof::kernels
