#include "tclkit/uq.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tclkit/estimators.hpp"
#include "tclkit/parallel.hpp"
#include "tclkit/random.hpp"
#include "tclkit/tcl.hpp"

namespace tclkit {

std::string_view to_string(Verdict verdict) noexcept {
  switch (verdict) {
    case Verdict::Negative: return "negative";
    case Verdict::Neutral: return "neutral";
    case Verdict::Positive: return "positive";
  }
  return "unknown";
}

Verdict classify_verdict(double median) noexcept {
  if (median < -100.0) return Verdict::Negative;
  if (median > 100.0) return Verdict::Positive;
  return Verdict::Neutral;
}

double sorted_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw Error(ErrorKind::InvalidInput, "quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorKind::InvalidInput, "quantile level outside [0, 1]");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BootstrapSummary summarize(std::vector<double> estimates) {
  BootstrapSummary summary;
  summary.estimates = std::move(estimates);
  std::vector<double> sorted = summary.estimates;
  std::sort(sorted.begin(), sorted.end());
  summary.median = sorted_quantile(sorted, 0.5);
  summary.quantile_05 = sorted_quantile(sorted, 0.05);
  summary.quantile_95 = sorted_quantile(sorted, 0.95);
  summary.verdict = classify_verdict(summary.median);
  return summary;
}

namespace {

struct TrialResult {
  double estimate = 0.0;
  double lambda = 0.0;
  bool boundary = false;
};

// Resamples within each treatment arm: row i is replaced by a random row of
// the same arm, so arm sizes match the original sample.
std::vector<std::size_t> arm_bootstrap_indices(const std::vector<double>& treatment, Engine& rng) {
  std::vector<std::size_t> arms[2];
  for (std::size_t i = 0; i < treatment.size(); ++i) arms[treatment[i] == 1.0 ? 1 : 0].push_back(i);
  std::vector<std::size_t> rows(treatment.size());
  for (std::size_t i = 0; i < treatment.size(); ++i) {
    const auto& pool = arms[treatment[i] == 1.0 ? 1 : 0];
    rows[i] = pool[draw_index(rng, pool.size())];
  }
  return rows;
}

TrialResult run_trial(const DomainPair& pair, EstimateMethod method, const BootstrapOptions& options,
                      const GlmFitConfig& config, std::size_t trial) {
  auto rng = make_engine(stream_seed(options.seed, trial));
  const auto target_rows = arm_bootstrap_indices(pair.target.treatment, rng);
  const auto target = pair.target.select_rows(target_rows);

  TrialResult result;
  switch (method) {
    case EstimateMethod::Correlation:
      result.estimate = pearson_correlation(target.treatment, target.outcome);
      break;
    case EstimateMethod::OLS:
      result.estimate = ols_treatment_coefficient(target).coefficient;
      break;
    case EstimateMethod::IPW:
      result.estimate = single_domain_ipw(target, options.link, config).value;
      break;
    case EstimateMethod::TCL: {
      const auto source_rows = arm_bootstrap_indices(pair.source.treatment, rng);
      const auto source = pair.source.select_rows(source_rows);
      const auto rough = rough_estimate(source, options.link, config);
      SelectionOptions selection;
      selection.criteria = {options.criterion};
      selection.folds = options.folds;
      selection.kernel = options.kernel;
      selection.seed = stream_seed(options.seed, trial) ^ 0x5bd1e995ULL;
      selection.threads = 1;
      const auto report = select_lambda_auto(target, rough.model, options.grid, config, selection);
      result.lambda = report.selected_lambda(options.criterion);
      result.estimate = report.estimate_at(result.lambda);
      result.boundary = report.boundary_flag();
      break;
    }
  }
  return result;
}

}  // namespace

BootstrapSummary bootstrap_ace(const DomainPair& pair, EstimateMethod method,
                               const BootstrapOptions& options, const GlmFitConfig& config) {
  if (options.trials == 0) throw Error(ErrorKind::InvalidInput, "bootstrap needs at least one trial");
  config.validate();
  if (method == EstimateMethod::TCL) {
    validate(pair);
  } else {
    validate(pair.target);
  }

  std::vector<TrialResult> results(options.trials);
  parallel_for(options.trials, options.threads, [&](std::size_t b) {
    try {
      results[b] = run_trial(pair, method, options, config, b);
    } catch (const Error& e) {
      throw Error(e.kind(), "bootstrap trial " + std::to_string(b) + ": " + e.what());
    }
  });

  std::vector<double> estimates;
  std::vector<double> lambdas;
  std::size_t boundary = 0;
  for (const auto& r : results) {
    estimates.push_back(r.estimate);
    if (method == EstimateMethod::TCL) lambdas.push_back(r.lambda);
    boundary += r.boundary ? 1 : 0;
  }
  auto summary = summarize(std::move(estimates));
  summary.lambdas = std::move(lambdas);
  summary.boundary_flag_count = boundary;
  return summary;
}

}  // namespace tclkit
