#include "tclkit/tcl.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tclkit {

std::size_t TransferFit::sparsity() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(delta.begin(), delta.end(), [](double v) { return v != 0.0; }));
}

GlmFit rough_estimate(const ObservationSet& source, LinkKind link, const GlmFitConfig& config) {
  return fit_glm(source, link, config);
}

TransferFit bias_correct(const ObservationSet& target, const PropensityModel& rough, double lambda,
                         const GlmFitConfig& config) {
  validate(target);
  if (rough.beta.size() != target.dimension()) {
    throw Error(ErrorKind::DimensionMismatch,
                "rough model has " + std::to_string(rough.beta.size()) +
                    " coefficients but target has " + std::to_string(target.dimension()) +
                    " columns");
  }
  if (!std::isfinite(lambda) || lambda < 0.0) {
    throw Error(ErrorKind::InvalidInput, "lambda must be finite and non-negative");
  }

  auto solution = solve_penalized_glm(target, rough.link, rough.beta, rough.beta, lambda, config);

  TransferFit fit;
  fit.beta_rough = rough.beta;
  fit.beta_corrected = std::move(solution.beta);
  fit.delta.resize(fit.beta_rough.size());
  for (std::size_t j = 0; j < fit.delta.size(); ++j) {
    fit.delta[j] = fit.beta_corrected[j] - fit.beta_rough[j];
  }
  fit.lambda = lambda;
  fit.converged = solution.converged;
  fit.iterations = solution.iterations;
  fit.objective_trace = std::move(solution.objective_trace);
  return fit;
}

double theoretical_lambda(const TheoreticalLambdaParams& params) {
  if (!(params.covariate_bound > 0.0) || !std::isfinite(params.covariate_bound)) {
    throw Error(ErrorKind::InvalidInput, "covariate bound must be positive");
  }
  if (params.n_target == 0 || params.n_source == 0 || params.dimension == 0) {
    throw Error(ErrorKind::InvalidInput, "sample sizes and dimension must be at least 1");
  }
  const double m = params.covariate_bound;
  const auto nt = static_cast<double>(params.n_target);
  const auto ns = static_cast<double>(params.n_source);
  const auto d = static_cast<double>(params.dimension);
  const double regime = std::max(25.0, nt * d * d / ns);
  return std::sqrt(5.0 * m * m * std::log(6.0 * nt * d) / (2.0 * nt) * regime);
}

double empirical_covariate_bound(const DomainPair& pair) {
  double bound = 0.0;
  for (const auto* set : {&pair.source, &pair.target}) {
    for (double v : set->covariates.values()) bound = std::max(bound, std::abs(v));
  }
  return bound;
}

}  // namespace tclkit
