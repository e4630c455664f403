#include "tclkit/sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tclkit/glm.hpp"
#include "tclkit/random.hpp"

namespace tclkit {

SimConfig SimConfig::reference_preset(std::uint64_t seed) {
  SimConfig config;
  config.seed = seed;
  return config;
}

void SimConfig::validate() const {
  auto fail = [](const std::string& message) { throw Error(ErrorKind::InvalidInput, message); };
  if (dimension == 0) fail("dimension must be at least 1");
  if (sparsity > dimension) fail("sparsity exceeds dimension");
  if (n_target == 0 || n_source == 0) fail("sample sizes must be at least 1");
  if (!(covariate_scale > 0.0) || !std::isfinite(covariate_scale)) fail("covariate_scale must be positive");
  if (!(coefficient_scale > 0.0) || !std::isfinite(coefficient_scale)) fail("coefficient_scale must be positive");
  if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) fail("noise_scale must be non-negative");
  if (!std::isfinite(difference_magnitude) || !std::isfinite(tau_source) || !std::isfinite(tau_target) ||
      !std::isfinite(confounding_scale)) {
    fail("simulation parameters must be finite");
  }
}

namespace {

ObservationSet draw_domain(std::size_t n, const std::vector<double>& beta, double tau,
                           const SimConfig& config, Engine& rng) {
  const std::size_t d = config.dimension;
  ObservationSet obs;
  obs.covariates = Matrix(n, d);
  obs.treatment.resize(n);
  obs.outcome.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto x = obs.covariates.row(i);
    double index = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      x[j] = std::abs(draw_normal(rng, 0.0, config.covariate_scale));
      index += x[j] * beta[j];
    }
    const double p = std::clamp(link_eval(config.true_link, project_to_domain(config.true_link, index)),
                                kSimProbabilityFloor, 1.0 - kSimProbabilityFloor);
    obs.treatment[i] = draw_uniform(rng) < p ? 1.0 : 0.0;
    const double noise = config.noise_scale > 0.0 ? draw_normal(rng, 0.0, config.noise_scale) : 0.0;
    obs.outcome[i] = tau * obs.treatment[i] + config.confounding_scale * index + noise;
  }
  return obs;
}

}  // namespace

std::pair<DomainPair, SimTruth> generate(const SimConfig& config) {
  config.validate();
  auto rng = make_engine(config.seed);
  const std::size_t d = config.dimension;

  SimTruth truth;
  truth.tau_source = config.tau_source;
  truth.tau_target = config.tau_target;
  truth.beta_source.resize(d);
  for (auto& b : truth.beta_source) b = std::abs(draw_normal(rng, 0.0, config.coefficient_scale));
  truth.difference_support = sample_without_replacement(d, config.sparsity, rng);
  std::sort(truth.difference_support.begin(), truth.difference_support.end());
  truth.beta_target = truth.beta_source;
  for (auto j : truth.difference_support) truth.beta_target[j] += config.difference_magnitude;

  DomainPair pair;
  pair.target = draw_domain(config.n_target, truth.beta_target, config.tau_target, config, rng);
  pair.source = draw_domain(config.n_source, truth.beta_source, config.tau_source, config, rng);
  return {std::move(pair), std::move(truth)};
}

double oracle_ipw_error(const SimTruth& truth, const CausalEstimate& estimate) {
  if (estimate.domain_label == "target") return std::abs(estimate.value - truth.tau_target);
  if (estimate.domain_label == "source") return std::abs(estimate.value - truth.tau_source);
  throw Error(ErrorKind::InvalidInput, "unknown domain label '" + estimate.domain_label + "'");
}

}  // namespace tclkit
