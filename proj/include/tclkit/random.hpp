#pragma once

// Seeded randomness. All draws go through boost::random distributions,
// whose algorithms are fixed by the library (unlike <random>'s, which vary
// between standard libraries), so seeded output is reproducible anywhere.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace tclkit {

using Engine = std::mt19937_64;

/// SplitMix64 finaliser; used to decorrelate user seeds and to derive
/// independent per-stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for stream `index` under a master seed.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix_seed(mix_seed(seed) ^ mix_seed(index + 0x632be59bd9b4e019ULL));
}

inline Engine make_engine(std::uint64_t seed) { return Engine(mix_seed(seed)); }

inline double draw_normal(Engine& rng, double mean, double sd) {
  return boost::random::normal_distribution<double>(mean, sd)(rng);
}

inline double draw_uniform(Engine& rng) { return boost::random::uniform_01<double>()(rng); }

inline std::size_t draw_index(Engine& rng, std::size_t n) {
  return boost::random::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

/// Fisher-Yates shuffle of `values`.
template <typename T>
void shuffle(std::span<T> values, Engine& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const std::size_t j = draw_index(rng, i);
    std::swap(values[i - 1], values[j]);
  }
}

/// `count` distinct indices from [0, n), in draw order.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count, Engine& rng);

/// n indices drawn uniformly with replacement from [0, n).
std::vector<std::size_t> bootstrap_indices(std::size_t n, Engine& rng);

}  // namespace tclkit
