// Runtime selection between the scalar reference and the vector variants.

#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kernels_internal.hpp"
#include "tclkit/kernels.hpp"

namespace tclkit::kernels {
namespace {

constexpr KernelTable kScalarTable{&scalar::dot, &scalar::axpy, &scalar::squared_distance};

#if TCLKIT_HAVE_AVX2
constexpr KernelTable kAvx2Table{&avx2::dot, &avx2::axpy, &avx2::squared_distance};
#endif

#if TCLKIT_HAVE_NEON
constexpr KernelTable kNeonTable{&neon::dot, &neon::axpy, &neon::squared_distance};
#endif

bool forced_scalar() noexcept {
  const char* value = std::getenv("TCLKIT_SIMD");
  return value != nullptr && std::string(value) == "scalar";
}

Isa detect() noexcept {
  if (forced_scalar()) return Isa::Scalar;
  if (isa_available(Isa::Avx2)) return Isa::Avx2;
  if (isa_available(Isa::Neon)) return Isa::Neon;
  return Isa::Scalar;
}

const KernelTable& active_table() noexcept {
  static const KernelTable& table = table_for(active_isa());
  return table;
}

}  // namespace

std::string_view to_string(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

bool isa_available(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if TCLKIT_HAVE_AVX2
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
      // NEON is mandatory on aarch64.
      return TCLKIT_HAVE_NEON != 0;
  }
  return false;
}

Isa active_isa() noexcept {
  static const Isa isa = detect();
  return isa;
}

const KernelTable& table_for(Isa isa) {
  if (!isa_available(isa)) {
    throw std::invalid_argument("kernel ISA not available: " + std::string(to_string(isa)));
  }
  switch (isa) {
#if TCLKIT_HAVE_AVX2
    case Isa::Avx2: return kAvx2Table;
#endif
#if TCLKIT_HAVE_NEON
    case Isa::Neon: return kNeonTable;
#endif
    default: return kScalarTable;
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  return active_table().dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active_table().axpy(alpha, x.data(), y.data(), x.size());
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  return active_table().squared_distance(a.data(), b.data(), a.size());
}

void gemv(std::span<const double> matrix, std::size_t rows, std::size_t cols,
          std::span<const double> v, std::span<double> out) {
  const auto& table = active_table();
  for (std::size_t i = 0; i < rows; ++i) {
    out[i] = table.dot(matrix.data() + i * cols, v.data(), cols);
  }
}

void gemv_transposed(std::span<const double> matrix, std::size_t rows, std::size_t cols,
                     std::span<const double> w, std::span<double> out) {
  const auto& table = active_table();
  for (std::size_t j = 0; j < cols; ++j) out[j] = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (w[i] != 0.0) table.axpy(w[i], matrix.data() + i * cols, out.data(), cols);
  }
}

}  // namespace tclkit::kernels
