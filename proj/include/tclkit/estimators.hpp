#pragma once

#include <span>
#include <string>
#include <utility>

#include "tclkit/core.hpp"
#include "tclkit/glm.hpp"
#include "tclkit/tcl.hpp"

namespace tclkit {

/// Horvitz-Thompson IPW estimate (1/n) sum[a y / e - (1 - a) y / (1 - e)].
/// Propensities must lie strictly inside (0, 1); clipping belongs to
/// predict_propensity.
CausalEstimate ipw_ace(const ObservationSet& obs, std::span<const double> propensities,
                       std::string domain_label = "target");

/// IPW with a propensity model fitted on `obs` alone.
CausalEstimate single_domain_ipw(const ObservationSet& obs, LinkKind link,
                                 const GlmFitConfig& config, std::string domain_label = "target");

/// Rough fit on the source, l1 correction on the target at `lambda`, then
/// IPW on the target with the clipped corrected propensities.
std::pair<CausalEstimate, TransferFit> tcl_ace(const DomainPair& pair, LinkKind link, double lambda,
                                               const GlmFitConfig& config);

/// Same as tcl_ace but reuses an existing rough model.
std::pair<CausalEstimate, TransferFit> tcl_ace_from_rough(const ObservationSet& target,
                                                          const PropensityModel& rough,
                                                          double lambda,
                                                          const GlmFitConfig& config);

/// Sample Pearson correlation; throws for constant input.
double pearson_correlation(std::span<const double> a, std::span<const double> b);

struct OlsResult {
  double coefficient = 0.0;
  double t_statistic = 0.0;
  double p_value = 1.0;
};

/// Regresses outcome on [1 | treatment | covariates]; reports the treatment
/// coefficient with a two-sided Student-t p-value on n - p degrees of freedom.
OlsResult ols_treatment_coefficient(const ObservationSet& obs);

}  // namespace tclkit
