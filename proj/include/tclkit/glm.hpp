#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tclkit/core.hpp"

namespace tclkit {

/// g(x). Linear is defined on [0,1], Exponential on [0,inf), Sigmoid
/// everywhere; arguments outside the domain throw ErrorKind::Domain.
double link_eval(LinkKind link, double x);

/// G(x) with G' = g and G(0) = 0 (Sigmoid: log(1 + e^x)).
double link_antiderivative(LinkKind link, double x);

/// Margin used when a linear index is projected into the interior of a
/// constrained link's domain.
inline constexpr double kLinkDomainMargin = 1e-6;

/// Clamp a linear index into the link's domain interior (identity for Sigmoid).
double project_to_domain(LinkKind link, double eta) noexcept;

enum class OptimizerKind {
  /// Gradient descent with Barzilai-Borwein trial steps and Armijo
  /// backtracking; stops on the gradient tolerance.
  LineSearch,
  /// Fixed learning-rate schedule: lr decays by `decay_factor` every
  /// `decay_interval` iterations.
  Schedule,
};

struct GlmFitConfig {
  OptimizerKind optimizer = OptimizerKind::LineSearch;
  std::size_t max_iterations = 20000;
  double gradient_tolerance = 1e-8;
  /// Learning rate for Schedule, first trial step for LineSearch.
  double step_size = 1.0;
  double decay_factor = 0.99;
  std::size_t decay_interval = 1000;
  double clip_epsilon = 0.01;
  /// Coefficient 2-norm beyond which a fit is reported as separated.
  double divergence_bound = 1e3;
  /// Record the objective after every accepted iterate (tests only).
  bool record_trace = false;

  /// The simulation schedule: 20000 iterations, lr 0.001, 1% decay every
  /// 1000 iterations.
  static GlmFitConfig reference_schedule();

  void validate() const;
};

struct GlmFit {
  PropensityModel model;
  bool converged = false;
  std::size_t iterations = 0;
  double objective = 0.0;
  std::vector<double> objective_trace;
  std::vector<std::string> warnings;
};

/// Mean negative log-likelihood (1/n) sum[-a_i x_i'b + G(x_i'b)]. Indices
/// outside a constrained link's domain use the tangent extension of G at
/// the projected point, so the objective stays convex and differentiable.
double glm_objective(const ObservationSet& obs, LinkKind link, std::span<const double> beta);

/// Objective value plus its gradient (1/n) sum (g(x_i'b) - a_i) x_i.
double glm_objective_gradient(const ObservationSet& obs, LinkKind link,
                              std::span<const double> beta, std::span<double> gradient);

/// Maximum-likelihood fit started at `init` (zeros if omitted).
/// Throws ErrorKind::Separation when the coefficients diverge or a Sigmoid
/// fit reproduces every label to within 1e-6. Non-convergence is reported
/// through GlmFit::converged, not thrown.
GlmFit fit_glm(const ObservationSet& obs, LinkKind link, const GlmFitConfig& config,
               std::optional<std::span<const double>> init = std::nullopt);

/// Result of the penalised solve shared by fit_glm and the transfer step.
struct PenalizedSolution {
  std::vector<double> beta;
  bool converged = false;
  std::size_t iterations = 0;
  double objective = 0.0;
  std::vector<double> objective_trace;
};

/// Minimises glm_objective(b) + lambda * ||b - anchor||_1 by proximal
/// gradient descent from `init`. lambda = 0 reduces to plain gradient
/// descent. Coordinates whose soft-threshold lands on zero equal the anchor
/// exactly.
PenalizedSolution solve_penalized_glm(const ObservationSet& obs, LinkKind link,
                                      std::span<const double> init,
                                      std::span<const double> anchor, double lambda,
                                      const GlmFitConfig& config);

/// g(x_i'beta) clamped to [clip_epsilon, 1 - clip_epsilon].
std::vector<double> predict_propensity(const PropensityModel& model, const Matrix& covariates,
                                       double clip_epsilon);

inline std::vector<double> predict_propensity(const PropensityModel& model,
                                              const ObservationSet& obs, double clip_epsilon) {
  return predict_propensity(model, obs.covariates, clip_epsilon);
}

}  // namespace tclkit
