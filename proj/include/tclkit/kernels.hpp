#pragma once

// Data-parallel inner loops shared by the GLM solvers and the kernel
// statistics. Every routine has a portable scalar reference; vectorised
// variants (AVX2+FMA on x86-64, NEON on aarch64) are selected once at
// runtime and must agree with the reference up to summation-order rounding.

#include <cstddef>
#include <span>
#include <string_view>

namespace tclkit::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa) noexcept;

/// Instruction set used by the dispatched entry points. Resolved on first
/// use from CPU features; TCLKIT_SIMD=scalar in the environment forces the
/// reference path.
Isa active_isa() noexcept;

/// True if `isa` can run on this machine (Scalar always can).
bool isa_available(Isa isa) noexcept;

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
};

/// Table for a specific ISA; throws std::invalid_argument if it is not
/// compiled in or not supported by the CPU.
const KernelTable& table_for(Isa isa);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
}  // namespace scalar

// Dispatched wrappers.
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double squared_distance(std::span<const double> a, std::span<const double> b);

/// out[i] = <row i of the row-major (rows x cols) matrix, v>
void gemv(std::span<const double> matrix, std::size_t rows, std::size_t cols,
          std::span<const double> v, std::span<double> out);

/// out = matrix^T * w (out has `cols` entries and is overwritten).
void gemv_transposed(std::span<const double> matrix, std::size_t rows, std::size_t cols,
                     std::span<const double> w, std::span<double> out);

}  // namespace tclkit::kernels
