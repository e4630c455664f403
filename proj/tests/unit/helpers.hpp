#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "tclkit/core.hpp"
#include "tclkit/random.hpp"

namespace testing {

inline tclkit::ObservationSet make_obs(std::vector<std::vector<double>> x, std::vector<double> a,
                                       std::vector<double> y) {
  return tclkit::ObservationSet{tclkit::Matrix::from_rows(x), std::move(a), std::move(y)};
}

// n x d standard normal design with Bernoulli(sigmoid(x'beta)) treatment.
inline tclkit::ObservationSet logistic_sample(std::size_t n, const std::vector<double>& beta,
                                              std::uint64_t seed) {
  auto rng = tclkit::make_engine(seed);
  const std::size_t d = beta.size();
  tclkit::ObservationSet obs{tclkit::Matrix(n, d), std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    double eta = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      obs.covariates(i, j) = tclkit::draw_normal(rng, 0.0, 1.0);
      eta += obs.covariates(i, j) * beta[j];
    }
    obs.treatment[i] = tclkit::draw_uniform(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
    obs.outcome[i] = obs.treatment[i] + tclkit::draw_normal(rng, 0.0, 1.0);
  }
  return obs;
}

}  // namespace testing
