#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tclkit/core.hpp"
#include "tclkit/glm.hpp"

namespace tclkit {

/// Gaussian RBF kernel k(x, y) = exp(-||x - y||^2 / r^2). An unset
/// bandwidth means the median heuristic on the pooled sample.
struct KernelConfig {
  std::optional<double> bandwidth;

  static KernelConfig median_heuristic() { return {}; }
  static KernelConfig fixed(double r);
};

double rbf_kernel(std::span<const double> x, std::span<const double> y, double bandwidth);

using KernelFunction = std::function<double(std::span<const double>, std::span<const double>)>;

/// Unbiased (U-statistic) squared MMD between the rows of `a_set` and
/// `b_set`. May be negative.
double mmd_unbiased(const Matrix& a_set, const Matrix& b_set, const KernelConfig& kernel);
double mmd_unbiased(const Matrix& a_set, const Matrix& b_set, const KernelFunction& kernel);

/// Median pairwise Euclidean distance between rows; falls back to the mean
/// distance, then to 1, when the median (then mean) is zero.
double median_heuristic_bandwidth(const Matrix& pooled);

/// (mean(a) - mean(b)) / sqrt((S_a + S_b) / 2) with biased (1/m, 1/n)
/// variances S.
double cohens_d(std::span<const double> a, std::span<const double> b);

/// Treated rows scaled by 1/e_i and control rows scaled by 1/(1 - e_i).
struct WeightedCovariateSets {
  Matrix treated;
  Matrix control;
};

WeightedCovariateSets make_weighted_sets(const ObservationSet& obs,
                                         std::span<const double> propensities);

/// Mean over coordinates of |cohens_d(treated_j, control_j)|.
double smd(const WeightedCovariateSets& sets);

double l2_err(std::span<const double> actual, std::span<const double> predicted);

/// Mean binary cross-entropy with predictions clamped to [clip, 1 - clip].
double ce_err(std::span<const double> actual, std::span<const double> predicted, double clip);

/// Mann-Whitney AUC: fraction of (positive, negative) pairs ranked
/// correctly, ties counting one half.
double auc(std::span<const double> actual, std::span<const double> scores);

enum class Metric { L2, CE, AUC };

struct CvResult {
  double value = 0.0;
  std::size_t fits = 0;
};

/// K-fold cross-validated nuisance metric of the l1-corrected model. Folds
/// are stratified by treatment: each class is shuffled with the seed and
/// dealt round-robin across folds.
CvResult cross_validated_metric(const ObservationSet& target, const PropensityModel& rough,
                                double lambda, std::size_t folds, Metric metric,
                                const GlmFitConfig& config, std::uint64_t seed);

/// Stratified fold assignment used by cross_validated_metric.
std::vector<std::size_t> assign_folds(std::span<const double> treatment, std::size_t folds,
                                      std::uint64_t seed);

enum class Criterion { MMD, SMD, CvL2, CvCE, CvAUC };

std::string_view to_string(Criterion criterion) noexcept;
Criterion parse_criterion(std::string_view name);
/// AUC is maximised; every other criterion is minimised.
bool higher_is_better(Criterion criterion) noexcept;
std::vector<Criterion> all_criteria();

struct SelectionOptions {
  std::vector<Criterion> criteria = all_criteria();
  std::size_t folds = 5;
  KernelConfig kernel = KernelConfig::median_heuristic();
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct CriterionReport {
  std::vector<double> lambda_grid;
  std::vector<Criterion> criteria;
  /// values[g][c]: criterion c at lambda_grid[g]; NaN where undefined.
  std::vector<std::vector<double>> values;
  /// l1-TCL estimate and nonzero count of delta at each grid point.
  std::vector<double> estimates;
  std::vector<std::size_t> sparsity;
  /// Selected lambda per criterion (aligned with `criteria`); nullopt when
  /// the criterion was undefined on the whole grid.
  std::vector<std::optional<double>> selected;
  std::vector<bool> boundary;
  /// First evaluation error per criterion, empty if none.
  std::vector<std::string> notes;
  PropensityModel rough;
  std::size_t expansions = 0;

  bool boundary_flag() const noexcept;
  /// Throws if the criterion was not evaluated or has no selection.
  double selected_lambda(Criterion criterion) const;
  double estimate_at(double lambda) const;
};

/// Evaluates each criterion at each grid point and selects argmin (argmax
/// for AUC), ties going to the smallest lambda.
CriterionReport select_lambda(const DomainPair& pair, std::span<const double> grid, LinkKind link,
                              const GlmFitConfig& config, const SelectionOptions& options);

/// Same, reusing a rough model already fitted on the source.
CriterionReport select_lambda(const ObservationSet& target, const PropensityModel& rough,
                              std::span<const double> grid, const GlmFitConfig& config,
                              const SelectionOptions& options);

struct GridSpec {
  double min = 0.0;
  double max = 0.1;
  double step = 1e-3;
  std::size_t max_expansions = 3;
};

/// min, min + step, ..., up to max (inclusive within rounding).
std::vector<double> linear_grid(double min, double max, double step);

/// select_lambda on linear_grid(spec); while some criterion lands on a grid
/// endpoint that can move, the range is doubled on that side (at most
/// spec.max_expansions times, never below zero).
CriterionReport select_lambda_auto(const ObservationSet& target, const PropensityModel& rough,
                                   const GridSpec& spec, const GlmFitConfig& config,
                                   const SelectionOptions& options);

CriterionReport select_lambda_auto(const DomainPair& pair, const GridSpec& spec, LinkKind link,
                                   const GlmFitConfig& config, const SelectionOptions& options);

}  // namespace tclkit
