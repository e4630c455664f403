#pragma once

#include <cstddef>

#if defined(__x86_64__) && defined(TCLKIT_ENABLE_SIMD)
#define TCLKIT_HAVE_AVX2 1
#else
#define TCLKIT_HAVE_AVX2 0
#endif

#if defined(__aarch64__) && defined(TCLKIT_ENABLE_SIMD)
#define TCLKIT_HAVE_NEON 1
#else
#define TCLKIT_HAVE_NEON 0
#endif

namespace tclkit::kernels {

#if TCLKIT_HAVE_AVX2
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
}  // namespace avx2
#endif

#if TCLKIT_HAVE_NEON
namespace neon {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
}  // namespace neon
#endif

}  // namespace tclkit::kernels
