#include "tclkit/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tclkit/kernels.hpp"

namespace tclkit {
namespace {

double link_value_unchecked(LinkKind link, double x) noexcept {
  switch (link) {
    case LinkKind::Linear: return x;
    case LinkKind::Sigmoid:
      if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
      {
        const double e = std::exp(x);
        return e / (1.0 + e);
      }
    case LinkKind::Exponential: return -std::expm1(-x);
  }
  return 0.0;
}

double antiderivative_unchecked(LinkKind link, double x) noexcept {
  switch (link) {
    case LinkKind::Linear: return 0.5 * x * x;
    case LinkKind::Sigmoid: return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    case LinkKind::Exponential: return x + std::expm1(-x);
  }
  return 0.0;
}

void check_domain(LinkKind link, double x) {
  bool inside = !std::isnan(x);
  if (link == LinkKind::Linear) inside = inside && x >= 0.0 && x <= 1.0;
  if (link == LinkKind::Exponential) inside = inside && x >= 0.0;
  if (!inside) {
    throw Error(ErrorKind::Domain, "argument " + std::to_string(x) + " outside the domain of the " +
                                       std::string(to_string(link)) + " link");
  }
}

double norm2(std::span<const double> v) { return std::sqrt(kernels::dot(v, v)); }

// Smooth part of the GLM objective with reusable buffers.
class GlmObjective {
 public:
  GlmObjective(const ObservationSet& obs, LinkKind link)
      : obs_(obs), link_(link), eta_(obs.size()), weights_(obs.size()) {}

  double value(std::span<const double> beta) {
    compute_index(beta);
    double total = 0.0;
    for (std::size_t i = 0; i < eta_.size(); ++i) total += row_loss(i);
    return total / static_cast<double>(eta_.size());
  }

  double value_gradient(std::span<const double> beta, std::span<double> gradient) {
    compute_index(beta);
    const auto n = static_cast<double>(eta_.size());
    double total = 0.0;
    for (std::size_t i = 0; i < eta_.size(); ++i) {
      total += row_loss(i);
      weights_[i] = (link_value_unchecked(link_, project_to_domain(link_, eta_[i])) -
                     obs_.treatment[i]) / n;
    }
    kernels::gemv_transposed(obs_.covariates.values(), obs_.covariates.rows(),
                             obs_.covariates.cols(), weights_, gradient);
    return total / n;
  }

 private:
  void compute_index(std::span<const double> beta) {
    kernels::gemv(obs_.covariates.values(), obs_.covariates.rows(), obs_.covariates.cols(), beta,
                  eta_);
  }

  double row_loss(std::size_t i) const {
    const double eta = eta_[i];
    const double c = project_to_domain(link_, eta);
    double big_g = antiderivative_unchecked(link_, c);
    if (c != eta) big_g += link_value_unchecked(link_, c) * (eta - c);
    return -obs_.treatment[i] * eta + big_g;
  }

  const ObservationSet& obs_;
  LinkKind link_;
  std::vector<double> eta_;
  std::vector<double> weights_;
};

double soft_threshold(double x, double threshold) noexcept {
  if (x > threshold) return x - threshold;
  if (x < -threshold) return x + threshold;
  return 0.0;
}

}  // namespace

double link_eval(LinkKind link, double x) {
  check_domain(link, x);
  return link_value_unchecked(link, x);
}

double link_antiderivative(LinkKind link, double x) {
  check_domain(link, x);
  return antiderivative_unchecked(link, x);
}

double project_to_domain(LinkKind link, double eta) noexcept {
  switch (link) {
    case LinkKind::Linear: return std::clamp(eta, kLinkDomainMargin, 1.0 - kLinkDomainMargin);
    case LinkKind::Exponential: return std::max(eta, kLinkDomainMargin);
    case LinkKind::Sigmoid: return eta;
  }
  return eta;
}

GlmFitConfig GlmFitConfig::reference_schedule() {
  GlmFitConfig config;
  config.optimizer = OptimizerKind::Schedule;
  config.max_iterations = 20000;
  config.step_size = 0.001;
  config.decay_factor = 0.99;
  config.decay_interval = 1000;
  return config;
}

void GlmFitConfig::validate() const {
  if (max_iterations == 0) throw Error(ErrorKind::InvalidInput, "max_iterations must be positive");
  if (!(gradient_tolerance > 0.0)) throw Error(ErrorKind::InvalidInput, "gradient_tolerance must be positive");
  if (!(step_size > 0.0) || !std::isfinite(step_size)) {
    throw Error(ErrorKind::InvalidInput, "step_size must be positive");
  }
  if (!(clip_epsilon > 0.0 && clip_epsilon < 0.5)) {
    throw Error(ErrorKind::InvalidInput, "clip_epsilon must lie in (0, 0.5)");
  }
  if (!(decay_factor > 0.0 && decay_factor <= 1.0) || decay_interval == 0) {
    throw Error(ErrorKind::InvalidInput, "invalid learning-rate decay");
  }
  if (!(divergence_bound > 0.0)) throw Error(ErrorKind::InvalidInput, "divergence_bound must be positive");
}

double glm_objective(const ObservationSet& obs, LinkKind link, std::span<const double> beta) {
  if (beta.size() != obs.dimension()) {
    throw Error(ErrorKind::DimensionMismatch, "coefficient length does not match covariates");
  }
  return GlmObjective(obs, link).value(beta);
}

double glm_objective_gradient(const ObservationSet& obs, LinkKind link,
                              std::span<const double> beta, std::span<double> gradient) {
  if (beta.size() != obs.dimension() || gradient.size() != obs.dimension()) {
    throw Error(ErrorKind::DimensionMismatch, "coefficient length does not match covariates");
  }
  return GlmObjective(obs, link).value_gradient(beta, gradient);
}

PenalizedSolution solve_penalized_glm(const ObservationSet& obs, LinkKind link,
                                      std::span<const double> init,
                                      std::span<const double> anchor, double lambda,
                                      const GlmFitConfig& config) {
  config.validate();
  const std::size_t d = obs.dimension();
  if (init.size() != d || anchor.size() != d) {
    throw Error(ErrorKind::DimensionMismatch, "coefficient length " + std::to_string(init.size()) +
                                                  " does not match dimension " + std::to_string(d));
  }
  if (!std::isfinite(lambda) || lambda < 0.0) {
    throw Error(ErrorKind::InvalidInput, "lambda must be finite and non-negative");
  }

  GlmObjective smooth(obs, link);
  auto penalty = [&](std::span<const double> b) {
    if (lambda == 0.0) return 0.0;
    double total = 0.0;
    for (std::size_t j = 0; j < d; ++j) total += std::abs(b[j] - anchor[j]);
    return lambda * total;
  };
  // out = anchor + soft(point - anchor, step * lambda); plain copy when lambda = 0.
  auto prox_step = [&](std::span<const double> b, std::span<const double> grad, double step,
                       std::span<double> out) {
    for (std::size_t j = 0; j < d; ++j) {
      const double moved = b[j] - step * grad[j];
      out[j] = lambda == 0.0 ? moved : anchor[j] + soft_threshold(moved - anchor[j], step * lambda);
    }
  };
  auto check_divergence = [&](std::span<const double> b) {
    const double norm = norm2(b);
    if (!std::isfinite(norm) || norm > config.divergence_bound) {
      throw Error(ErrorKind::Separation,
                  "coefficient norm exceeded " + std::to_string(config.divergence_bound) +
                      " (perfect separation or divergent optimisation)");
    }
  };

  PenalizedSolution result;
  std::vector<double> beta(init.begin(), init.end());
  std::vector<double> grad(d), trial(d), trial_grad(d), diff(d);
  double f = smooth.value_gradient(beta, grad);
  if (config.record_trace) result.objective_trace.push_back(f + penalty(beta));

  if (config.optimizer == OptimizerKind::Schedule) {
    double lr = config.step_size;
    for (std::size_t it = 0; it < config.max_iterations; ++it) {
      if (it > 0 && it % config.decay_interval == 0) lr *= config.decay_factor;
      prox_step(beta, grad, lr, trial);
      for (std::size_t j = 0; j < d; ++j) diff[j] = trial[j] - beta[j];
      if (norm2(diff) / lr <= config.gradient_tolerance) {
        result.converged = true;
        break;
      }
      beta.swap(trial);
      f = smooth.value_gradient(beta, grad);
      result.iterations = it + 1;
      if (config.record_trace) result.objective_trace.push_back(f + penalty(beta));
      check_divergence(beta);
    }
  } else {
    double step = config.step_size;
    for (std::size_t it = 0; it < config.max_iterations; ++it) {
      double t = step;
      double f_trial = 0.0;
      bool first_trial = true;
      bool accepted = false;
      while (t > 1e-20) {
        prox_step(beta, grad, t, trial);
        double sq = 0.0;
        double lin = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          diff[j] = trial[j] - beta[j];
          sq += diff[j] * diff[j];
          lin += grad[j] * diff[j];
        }
        if (first_trial && std::sqrt(sq) / t <= config.gradient_tolerance) {
          result.converged = true;
          break;
        }
        first_trial = false;
        f_trial = smooth.value_gradient(trial, trial_grad);
        const double slack = 1e-14 * std::max(1.0, std::abs(f));
        if (std::isfinite(f_trial) && f_trial <= f + lin + sq / (2.0 * t) + slack) {
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (result.converged || !accepted) break;

      // Barzilai-Borwein guess for the next trial step.
      double sy = 0.0;
      double ss = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double y = trial_grad[j] - grad[j];
        sy += diff[j] * y;
        ss += diff[j] * diff[j];
      }
      step = sy > 0.0 ? std::clamp(ss / sy, 1e-12, 1e12) : std::min(2.0 * t, 1e12);

      beta.swap(trial);
      grad.swap(trial_grad);
      f = f_trial;
      result.iterations = it + 1;
      if (config.record_trace) result.objective_trace.push_back(f + penalty(beta));
      check_divergence(beta);
    }
  }

  result.objective = f + penalty(beta);
  result.beta = std::move(beta);
  return result;
}

GlmFit fit_glm(const ObservationSet& obs, LinkKind link, const GlmFitConfig& config,
               std::optional<std::span<const double>> init) {
  validate(obs);
  config.validate();
  const std::size_t d = obs.dimension();
  if (d == 0) throw Error(ErrorKind::InvalidInput, "no covariates to fit");

  std::vector<double> start(d, 0.0);
  if (init) {
    if (init->size() != d) throw Error(ErrorKind::DimensionMismatch, "initial coefficients have wrong length");
    start.assign(init->begin(), init->end());
  }

  GlmFit fit;
  if (obs.size() < d) {
    fit.warnings.push_back("fewer rows (" + std::to_string(obs.size()) + ") than covariates (" +
                           std::to_string(d) + ")");
  }
  auto solution = solve_penalized_glm(obs, link, start, start, 0.0, config);

  if (link == LinkKind::Sigmoid && solution.converged) {
    std::vector<double> eta(obs.size());
    kernels::gemv(obs.covariates.values(), obs.size(), d, solution.beta, eta);
    bool perfect = true;
    for (std::size_t i = 0; i < eta.size() && perfect; ++i) {
      perfect = std::abs(link_value_unchecked(link, eta[i]) - obs.treatment[i]) < 1e-6;
    }
    if (perfect) {
      throw Error(ErrorKind::Separation,
                  "perfect separation: fitted probabilities reproduce every treatment label");
    }
  }

  fit.model = PropensityModel{link, std::move(solution.beta)};
  fit.converged = solution.converged;
  fit.iterations = solution.iterations;
  fit.objective = solution.objective;
  fit.objective_trace = std::move(solution.objective_trace);
  if (!fit.converged) {
    fit.warnings.push_back("optimizer stopped after " + std::to_string(fit.iterations) +
                           " iterations without reaching the gradient tolerance");
  }
  return fit;
}

std::vector<double> predict_propensity(const PropensityModel& model, const Matrix& covariates,
                                       double clip_epsilon) {
  if (model.beta.size() != covariates.cols()) {
    throw Error(ErrorKind::DimensionMismatch,
                "model has " + std::to_string(model.beta.size()) + " coefficients but data has " +
                    std::to_string(covariates.cols()) + " columns");
  }
  if (!(clip_epsilon >= 0.0 && clip_epsilon < 0.5)) {
    throw Error(ErrorKind::InvalidInput, "clip_epsilon must lie in [0, 0.5)");
  }
  std::vector<double> out(covariates.rows());
  kernels::gemv(covariates.values(), covariates.rows(), covariates.cols(), model.beta, out);
  for (auto& value : out) {
    const double p = link_value_unchecked(model.link, project_to_domain(model.link, value));
    value = std::clamp(p, clip_epsilon, 1.0 - clip_epsilon);
  }
  return out;
}

}  // namespace tclkit
