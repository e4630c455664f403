#pragma once

#include <cstddef>
#include <vector>

#include "tclkit/core.hpp"
#include "tclkit/glm.hpp"

namespace tclkit {

/// Outcome of the two-stage transfer fit for the target propensity model.
struct TransferFit {
  std::vector<double> beta_rough;
  std::vector<double> beta_corrected;
  /// beta_corrected - beta_rough, computed elementwise after the solve.
  std::vector<double> delta;
  double lambda = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  /// Penalised objective per accepted iterate when config.record_trace is set.
  std::vector<double> objective_trace;

  std::size_t sparsity() const noexcept;
  PropensityModel corrected_model(LinkKind link) const { return {link, beta_corrected}; }
};

/// Source-domain maximum likelihood fit used as the rough target estimate.
GlmFit rough_estimate(const ObservationSet& source, LinkKind link, const GlmFitConfig& config);

/// Target-domain fit penalised by lambda * ||b - rough||_1, solved by
/// proximal gradient descent initialised at the rough coefficients.
TransferFit bias_correct(const ObservationSet& target, const PropensityModel& rough, double lambda,
                         const GlmFitConfig& config);

struct TheoreticalLambdaParams {
  double covariate_bound = 1.0;
  std::size_t n_target = 1;
  std::size_t n_source = 1;
  std::size_t dimension = 1;
};

/// sqrt(5 M^2 log(6 n_T d) / (2 n_T) * max{25, n_T d^2 / n_S}).
double theoretical_lambda(const TheoreticalLambdaParams& params);

/// Largest absolute covariate entry over both domains.
double empirical_covariate_bound(const DomainPair& pair);

}  // namespace tclkit
