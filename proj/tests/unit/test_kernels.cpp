#include <cmath>
#include <vector>

#include "doctest.h"
#include "tclkit/kernels.hpp"
#include "tclkit/random.hpp"

using namespace tclkit;
using namespace tclkit::kernels;

namespace {

std::vector<double> random_vector(std::size_t n, Engine& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = draw_normal(rng, 0.0, 1.0);
  return v;
}

double relative_gap(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("scalar kernels on small cases") {
  const std::vector<double> a{1, 2, 3};
  const std::vector<double> b{4, -5, 6};
  CHECK(scalar::dot(a.data(), b.data(), 3) == 12.0);
  CHECK(scalar::squared_distance(a.data(), b.data(), 3) == 9.0 + 49.0 + 9.0);
  std::vector<double> y{1, 1, 1};
  scalar::axpy(2.0, a.data(), y.data(), 3);
  CHECK(y == std::vector<double>{3, 5, 7});
  CHECK(scalar::dot(a.data(), b.data(), 0) == 0.0);
}

TEST_CASE("every available ISA matches the scalar reference") {
  auto rng = make_engine(3);
  const auto& reference = table_for(Isa::Scalar);
  for (auto isa : {Isa::Avx2, Isa::Neon}) {
    if (!isa_available(isa)) {
      MESSAGE("skipping unavailable ISA " << to_string(isa));
      continue;
    }
    const auto& table = table_for(isa);
    // Lengths straddle the vector widths and unrolled tails.
    for (std::size_t n : {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 33, 50, 64, 101, 1000}) {
      CAPTURE(n);
      const auto a = random_vector(n, rng);
      const auto b = random_vector(n, rng);
      CHECK(relative_gap(table.dot(a.data(), b.data(), n), reference.dot(a.data(), b.data(), n)) < 1e-12);
      CHECK(relative_gap(table.squared_distance(a.data(), b.data(), n),
                         reference.squared_distance(a.data(), b.data(), n)) < 1e-12);
      auto y1 = b;
      auto y2 = b;
      table.axpy(0.37, a.data(), y1.data(), n);
      reference.axpy(0.37, a.data(), y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 1e-15 * (1.0 + std::abs(y2[i])));
    }
  }
}

TEST_CASE("unavailable ISA tables are refused") {
  for (auto isa : {Isa::Avx2, Isa::Neon}) {
    if (!isa_available(isa)) CHECK_THROWS(table_for(isa));
  }
  CHECK(isa_available(Isa::Scalar));
  CHECK(isa_available(active_isa()));
}

TEST_CASE("gemv and gemv_transposed against loops") {
  auto rng = make_engine(5);
  const std::size_t rows = 13;
  const std::size_t cols = 9;
  const auto m = random_vector(rows * cols, rng);
  const auto v = random_vector(cols, rng);
  auto w = random_vector(rows, rng);
  w[4] = 0.0;
  std::vector<double> out(rows);
  gemv(m, rows, cols, v, out);
  for (std::size_t i = 0; i < rows; ++i) {
    double expect = 0.0;
    for (std::size_t j = 0; j < cols; ++j) expect += m[i * cols + j] * v[j];
    CHECK(out[i] == doctest::Approx(expect).epsilon(1e-12));
  }
  std::vector<double> back(cols, 99.0);
  gemv_transposed(m, rows, cols, w, back);
  for (std::size_t j = 0; j < cols; ++j) {
    double expect = 0.0;
    for (std::size_t i = 0; i < rows; ++i) expect += m[i * cols + j] * w[i];
    CHECK(back[j] == doctest::Approx(expect).epsilon(1e-12));
  }
}
