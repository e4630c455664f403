#include "tclkit/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

namespace tclkit {

CausalEstimate ipw_ace(const ObservationSet& obs, std::span<const double> propensities,
                       std::string domain_label) {
  const std::size_t n = obs.size();
  if (propensities.size() != n) {
    throw Error(ErrorKind::DimensionMismatch, "expected " + std::to_string(n) +
                                                  " propensities, got " +
                                                  std::to_string(propensities.size()));
  }
  if (n == 0) throw Error(ErrorKind::InvalidInput, "cannot estimate on an empty set");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = propensities[i];
    if (!(e > 0.0 && e < 1.0)) {
      throw Error(ErrorKind::Domain, "propensity at row " + std::to_string(i) +
                                         " is not strictly inside (0, 1)");
    }
    const double a = obs.treatment[i];
    const double y = obs.outcome[i];
    total += a * y / e - (1.0 - a) * y / (1.0 - e);
  }
  return CausalEstimate{total / static_cast<double>(n), EstimateMethod::IPW, std::move(domain_label)};
}

CausalEstimate single_domain_ipw(const ObservationSet& obs, LinkKind link,
                                 const GlmFitConfig& config, std::string domain_label) {
  const auto fit = fit_glm(obs, link, config);
  const auto e = predict_propensity(fit.model, obs, config.clip_epsilon);
  return ipw_ace(obs, e, std::move(domain_label));
}

std::pair<CausalEstimate, TransferFit> tcl_ace_from_rough(const ObservationSet& target,
                                                          const PropensityModel& rough,
                                                          double lambda,
                                                          const GlmFitConfig& config) {
  auto fit = bias_correct(target, rough, lambda, config);
  const auto e = predict_propensity(fit.corrected_model(rough.link), target, config.clip_epsilon);
  auto estimate = ipw_ace(target, e, "target");
  estimate.method = EstimateMethod::TCL;
  return {std::move(estimate), std::move(fit)};
}

std::pair<CausalEstimate, TransferFit> tcl_ace(const DomainPair& pair, LinkKind link, double lambda,
                                               const GlmFitConfig& config) {
  validate(pair);
  const auto rough = rough_estimate(pair.source, link, config);
  return tcl_ace_from_rough(pair.target, rough.model, lambda, config);
}

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::DimensionMismatch, "correlation inputs differ in length");
  if (a.size() < 2) throw Error(ErrorKind::InvalidInput, "correlation needs at least two points");
  const auto n = static_cast<double>(a.size());
  double mean_a = 0.0;
  double mean_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= n;
  mean_b /= n;
  double saa = 0.0;
  double sbb = 0.0;
  double sab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa == 0.0 || sbb == 0.0) {
    throw Error(ErrorKind::InvalidInput, "correlation undefined for constant input (zero variance)");
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

OlsResult ols_treatment_coefficient(const ObservationSet& obs) {
  validate(obs);
  const std::size_t n = obs.size();
  const std::size_t p = obs.dimension() + 2;
  if (n <= p) {
    throw Error(ErrorKind::InvalidInput, "OLS needs more rows (" + std::to_string(n) +
                                             ") than parameters (" + std::to_string(p) + ")");
  }

  Eigen::MatrixXd design(n, p);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    design(row, 0) = 1.0;
    design(row, 1) = obs.treatment[i];
    for (std::size_t j = 0; j < obs.dimension(); ++j) {
      design(row, static_cast<Eigen::Index>(j + 2)) = obs.covariates(i, j);
    }
    y(row) = obs.outcome[i];
  }

  const Eigen::MatrixXd gram = design.transpose() * design;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> spectrum(gram, Eigen::EigenvaluesOnly);
  const auto& eig = spectrum.eigenvalues();
  if (!(eig.minCoeff() > 1e-10 * eig.maxCoeff())) {
    throw Error(ErrorKind::InvalidInput, "design matrix [1 | treatment | covariates] is rank deficient");
  }
  const Eigen::LDLT<Eigen::MatrixXd> solver(gram);
  const Eigen::VectorXd coef = solver.solve(design.transpose() * y);
  const Eigen::VectorXd residual = y - design * coef;
  const double dof = static_cast<double>(n - p);
  const double sigma2 = residual.squaredNorm() / dof;
  const Eigen::VectorXd unit = Eigen::VectorXd::Unit(static_cast<Eigen::Index>(p), 1);
  const double inv11 = solver.solve(unit)(1);

  OlsResult result;
  result.coefficient = coef(1);
  const double se = std::sqrt(sigma2 * inv11);
  if (se > 0.0 && std::isfinite(se)) {
    result.t_statistic = result.coefficient / se;
    const boost::math::students_t dist(dof);
    result.p_value = std::clamp(
        2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(result.t_statistic))), 0.0, 1.0);
  } else {
    // Exact fit: zero residual variance.
    result.t_statistic = result.coefficient == 0.0
                             ? 0.0
                             : std::copysign(std::numeric_limits<double>::infinity(), result.coefficient);
    result.p_value = result.coefficient == 0.0 ? 1.0 : 0.0;
  }
  return result;
}

}  // namespace tclkit
