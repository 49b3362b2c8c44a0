#pragma once

// Squared Euclidean distance between float descriptors, the inner loop of
// k-means and word assignment.
//
// Every variant computes exactly the same value, bit for bit:
//   - each term is (double(a[i]) - double(b[i]))^2, multiply then add
//   - the first floor(n/8)*8 terms go to 8 lane accumulators, term i into
//     lane i % 8
//   - lanes reduce as ((l0+l4) + (l2+l6)) + ((l1+l5) + (l3+l7))
//   - remaining tail terms are added sequentially to that sum
// The scalar variant is the reference; SIMD variants are selected at run
// time when the CPU supports them.

#include <cstddef>
#include <span>
#include <string_view>

namespace bof::kernels {

enum class SimdLevel { kScalar, kAvx2, kNeon };

using SquaredL2Fn = double (*)(const float* a, const float* b, std::size_t n);

double squared_l2_scalar(const float* a, const float* b, std::size_t n);
#if defined(__x86_64__) || defined(_M_X64)
double squared_l2_avx2(const float* a, const float* b, std::size_t n);
#endif
#if defined(__aarch64__)
double squared_l2_neon(const float* a, const float* b, std::size_t n);
#endif

// True if this build contains the variant and the running CPU can execute it.
bool supported(SimdLevel level);

// Kernel for a specific level; nullptr when unsupported.
SquaredL2Fn squared_l2_for(SimdLevel level);

// Best supported level, detected once.
SimdLevel active_level();
std::string_view level_name(SimdLevel level);

inline double squared_l2(std::span<const float> a, std::span<const float> b) {
  static const SquaredL2Fn fn = squared_l2_for(active_level());
  return fn(a.data(), b.data(), a.size());
}

}  // namespace bof::kernels
