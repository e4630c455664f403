#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "tclkit/core.hpp"

namespace tclkit {

struct SimConfig {
  std::size_t dimension = 50;
  std::size_t sparsity = 2;
  std::size_t n_target = 100;
  std::size_t n_source = 2000;
  double difference_magnitude = 0.2;
  double tau_source = 5.0;
  double tau_target = 3.0;
  LinkKind true_link = LinkKind::Exponential;
  double covariate_scale = 1.0;
  double coefficient_scale = 0.1;
  double noise_scale = 1.0;
  /// Outcome confounding weights are confounding_scale * beta of the domain.
  double confounding_scale = 1.0;
  std::uint64_t seed = 0;

  static SimConfig reference_preset(std::uint64_t seed = 0);
  void validate() const;
};

struct SimTruth {
  std::vector<double> beta_source;
  std::vector<double> beta_target;
  /// Ascending.
  std::vector<std::size_t> difference_support;
  double tau_source = 0.0;
  double tau_target = 0.0;
};

/// Treatment probabilities are the true link at x'beta clamped to
/// [kSimProbabilityFloor, 1 - kSimProbabilityFloor].
inline constexpr double kSimProbabilityFloor = 0.01;

/// Covariates |N(0, covariate_scale^2)|, beta_S = |N(0, coefficient_scale^2)|,
/// beta_T = beta_S + magnitude on a uniformly drawn support, outcome
/// Y = tau A + x'w + N(0, noise_scale^2). Target rows are drawn before
/// source rows, so the target sample does not depend on n_source.
std::pair<DomainPair, SimTruth> generate(const SimConfig& config);

/// |estimate - tau| for the domain named by the estimate's label
/// ("source" or "target").
double oracle_ipw_error(const SimTruth& truth, const CausalEstimate& estimate);

}  // namespace tclkit
