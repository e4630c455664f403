#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tclkit/core.hpp"
#include "tclkit/criteria.hpp"
#include "tclkit/glm.hpp"

namespace tclkit {

enum class Verdict { Negative, Neutral, Positive };

std::string_view to_string(Verdict verdict) noexcept;

/// Negative below -100, Positive above 100, Neutral on [-100, 100].
Verdict classify_verdict(double median) noexcept;

/// Linear-interpolation quantile of an already sorted sample (q in [0, 1]).
double sorted_quantile(std::span<const double> sorted, double q);

struct BootstrapSummary {
  std::vector<double> estimates;
  /// Selected lambda per trial (TCL only).
  std::vector<double> lambdas;
  double median = 0.0;
  double quantile_05 = 0.0;
  double quantile_95 = 0.0;
  Verdict verdict = Verdict::Neutral;
  std::size_t boundary_flag_count = 0;
};

/// Median and quantiles recomputed from `estimates`.
BootstrapSummary summarize(std::vector<double> estimates);

struct BootstrapOptions {
  std::size_t trials = 100;
  Criterion criterion = Criterion::MMD;
  GridSpec grid;
  LinkKind link = LinkKind::Sigmoid;
  std::size_t folds = 5;
  KernelConfig kernel = KernelConfig::median_heuristic();
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

/// Trial b resamples the target (and, for TCL, the source) with
/// replacement from stream_seed(seed, b), reruns the estimator and, for
/// TCL, selects lambda on the resampled data. Correlation and OLS use the
/// target domain only.
BootstrapSummary bootstrap_ace(const DomainPair& pair, EstimateMethod method,
                               const BootstrapOptions& options, const GlmFitConfig& config);

}  // namespace tclkit
