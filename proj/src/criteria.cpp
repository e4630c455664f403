#include "tclkit/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "tclkit/estimators.hpp"
#include "tclkit/kernels.hpp"
#include "tclkit/parallel.hpp"
#include "tclkit/random.hpp"
#include "tclkit/tcl.hpp"

namespace tclkit {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_same_length(std::size_t a, std::size_t b, std::string_view what) {
  if (a != b) {
    throw Error(ErrorKind::DimensionMismatch, std::string(what) + ": lengths " + std::to_string(a) +
                                                  " and " + std::to_string(b) + " differ");
  }
}

// Biased (1/n) variance and mean.
std::pair<double, double> mean_and_variance(std::span<const double> v) {
  const auto n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, ss / n};
}

}  // namespace

KernelConfig KernelConfig::fixed(double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw Error(ErrorKind::InvalidInput, "kernel bandwidth must be positive");
  return KernelConfig{r};
}

double rbf_kernel(std::span<const double> x, std::span<const double> y, double bandwidth) {
  return std::exp(-kernels::squared_distance(x, y) / (bandwidth * bandwidth));
}

double mmd_unbiased(const Matrix& a_set, const Matrix& b_set, const KernelFunction& kernel) {
  const std::size_t m = a_set.rows();
  const std::size_t n = b_set.rows();
  if (m < 2 || n < 2) {
    throw Error(ErrorKind::InvalidInput, "MMD needs at least two points per set (got " +
                                             std::to_string(m) + " and " + std::to_string(n) + ")");
  }
  if (a_set.cols() != b_set.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "MMD sets have different dimensions");
  }
  // Symmetric kernels: sum the upper triangle and double it.
  auto within = [&](const Matrix& set) {
    double sum = 0.0;
    for (std::size_t i = 0; i < set.rows(); ++i) {
      for (std::size_t j = i + 1; j < set.rows(); ++j) sum += kernel(set.row(i), set.row(j));
    }
    const auto k = static_cast<double>(set.rows());
    return 2.0 * sum / (k * (k - 1.0));
  };
  double cross = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) cross += kernel(a_set.row(i), b_set.row(j));
  }
  cross /= static_cast<double>(m) * static_cast<double>(n);
  return within(a_set) + within(b_set) - 2.0 * cross;
}

double mmd_unbiased(const Matrix& a_set, const Matrix& b_set, const KernelConfig& kernel) {
  double bandwidth = 0.0;
  if (kernel.bandwidth) {
    bandwidth = *kernel.bandwidth;
    if (!(bandwidth > 0.0)) throw Error(ErrorKind::InvalidInput, "kernel bandwidth must be positive");
  } else {
    if (a_set.cols() != b_set.cols()) {
      throw Error(ErrorKind::DimensionMismatch, "MMD sets have different dimensions");
    }
    Matrix pooled = a_set;
    if (b_set.rows() > 0) {
      std::vector<double> data(a_set.values().begin(), a_set.values().end());
      data.insert(data.end(), b_set.values().begin(), b_set.values().end());
      pooled = Matrix(a_set.rows() + b_set.rows(), a_set.cols(), std::move(data));
    }
    bandwidth = median_heuristic_bandwidth(pooled);
  }
  return mmd_unbiased(a_set, b_set, [bandwidth](std::span<const double> x, std::span<const double> y) {
    return rbf_kernel(x, y, bandwidth);
  });
}

double median_heuristic_bandwidth(const Matrix& pooled) {
  const std::size_t n = pooled.rows();
  if (n < 2) throw Error(ErrorKind::InvalidInput, "median heuristic needs at least two points");
  std::vector<double> distances;
  distances.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      distances.push_back(std::sqrt(kernels::squared_distance(pooled.row(i), pooled.row(j))));
    }
  }
  const std::size_t count = distances.size();
  const auto mid = distances.begin() + static_cast<std::ptrdiff_t>(count / 2);
  std::nth_element(distances.begin(), mid, distances.end());
  double median = *mid;
  if (count % 2 == 0) {
    median = 0.5 * (median + *std::max_element(distances.begin(), mid));
  }
  if (median > 0.0) return median;
  const double mean = std::accumulate(distances.begin(), distances.end(), 0.0) / static_cast<double>(count);
  return mean > 0.0 ? mean : 1.0;
}

double cohens_d(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::InvalidInput, "Cohen's d needs non-empty samples");
  const auto [mean_a, var_a] = mean_and_variance(a);
  const auto [mean_b, var_b] = mean_and_variance(b);
  const double pooled = std::sqrt(0.5 * (var_a + var_b));
  if (!(pooled > 0.0)) throw Error(ErrorKind::InvalidInput, "Cohen's d has a zero pooled denominator");
  return (mean_a - mean_b) / pooled;
}

WeightedCovariateSets make_weighted_sets(const ObservationSet& obs,
                                         std::span<const double> propensities) {
  require_same_length(obs.size(), propensities.size(), "weighted sets");
  std::vector<std::size_t> treated;
  std::vector<std::size_t> control;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    (obs.treatment[i] == 1.0 ? treated : control).push_back(i);
  }
  WeightedCovariateSets sets{obs.covariates.select_rows(treated), obs.covariates.select_rows(control)};
  for (std::size_t k = 0; k < treated.size(); ++k) {
    const double w = 1.0 / propensities[treated[k]];
    for (auto& v : sets.treated.row(k)) v *= w;
  }
  for (std::size_t k = 0; k < control.size(); ++k) {
    const double w = 1.0 / (1.0 - propensities[control[k]]);
    for (auto& v : sets.control.row(k)) v *= w;
  }
  return sets;
}

double smd(const WeightedCovariateSets& sets) {
  if (sets.treated.rows() == 0 || sets.control.rows() == 0) {
    throw Error(ErrorKind::InvalidInput, "SMD needs treated and control rows");
  }
  if (sets.treated.cols() != sets.control.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "SMD sets have different dimensions");
  }
  const std::size_t d = sets.treated.cols();
  if (d == 0) throw Error(ErrorKind::InvalidInput, "SMD needs at least one covariate");
  double total = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    try {
      total += std::abs(cohens_d(sets.treated.column(j), sets.control.column(j)));
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(e.what()) + " at coordinate " + std::to_string(j));
    }
  }
  return total / static_cast<double>(d);
}

double l2_err(std::span<const double> actual, std::span<const double> predicted) {
  require_same_length(actual.size(), predicted.size(), "l2 error");
  if (actual.empty()) throw Error(ErrorKind::InvalidInput, "l2 error of an empty sample");
  double total = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double r = actual[i] - predicted[i];
    total += r * r;
  }
  return total / static_cast<double>(actual.size());
}

double ce_err(std::span<const double> actual, std::span<const double> predicted, double clip) {
  require_same_length(actual.size(), predicted.size(), "cross-entropy");
  if (actual.empty()) throw Error(ErrorKind::InvalidInput, "cross-entropy of an empty sample");
  if (!(clip > 0.0 && clip < 0.5)) throw Error(ErrorKind::InvalidInput, "clip must lie in (0, 0.5)");
  double total = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double p = std::clamp(predicted[i], clip, 1.0 - clip);
    total += actual[i] * std::log(p) + (1.0 - actual[i]) * std::log1p(-p);
  }
  return -total / static_cast<double>(actual.size());
}

double auc(std::span<const double> actual, std::span<const double> scores) {
  require_same_length(actual.size(), scores.size(), "AUC");
  // Sort by score and credit each positive with the negatives strictly
  // below it plus half of the tied negatives: O(n log n) pair counting.
  std::vector<std::size_t> order(actual.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return scores[i] < scores[j]; });
  double positives = 0.0;
  double negatives = 0.0;
  double credit = 0.0;
  for (std::size_t start = 0; start < order.size();) {
    std::size_t end = start;
    double pos_in_tie = 0.0;
    double neg_in_tie = 0.0;
    while (end < order.size() && scores[order[end]] == scores[order[start]]) {
      (actual[order[end]] == 1.0 ? pos_in_tie : neg_in_tie) += 1.0;
      ++end;
    }
    credit += pos_in_tie * (negatives + 0.5 * neg_in_tie);
    positives += pos_in_tie;
    negatives += neg_in_tie;
    start = end;
  }
  if (positives == 0.0 || negatives == 0.0) {
    throw Error(ErrorKind::InvalidInput, "AUC needs both positive and negative labels");
  }
  return credit / (positives * negatives);
}

std::vector<std::size_t> assign_folds(std::span<const double> treatment, std::size_t folds,
                                      std::uint64_t seed) {
  auto rng = make_engine(seed);
  std::vector<std::size_t> treated;
  std::vector<std::size_t> control;
  for (std::size_t i = 0; i < treatment.size(); ++i) {
    (treatment[i] == 1.0 ? treated : control).push_back(i);
  }
  shuffle(std::span<std::size_t>(treated), rng);
  shuffle(std::span<std::size_t>(control), rng);
  std::vector<std::size_t> fold_of(treatment.size());
  std::size_t dealt = 0;
  for (const auto* group : {&treated, &control}) {
    for (auto i : *group) fold_of[i] = dealt++ % folds;
  }
  return fold_of;
}

namespace {

struct FoldPredictions {
  std::vector<std::vector<double>> actual;
  std::vector<std::vector<double>> predicted;
};

FoldPredictions cv_predictions(const ObservationSet& target, const PropensityModel& rough, double lambda,
                               std::size_t folds, const GlmFitConfig& config, std::uint64_t seed) {
  validate(target);
  if (folds < 2) throw Error(ErrorKind::InvalidInput, "cross-validation needs at least 2 folds");
  if (target.size() < folds) {
    throw Error(ErrorKind::InvalidInput, "fewer rows (" + std::to_string(target.size()) +
                                             ") than folds (" + std::to_string(folds) + ")");
  }
  const auto fold_of = assign_folds(target.treatment, folds, seed);
  FoldPredictions out;
  for (std::size_t k = 0; k < folds; ++k) {
    std::vector<std::size_t> train;
    std::vector<std::size_t> held_out;
    for (std::size_t i = 0; i < target.size(); ++i) (fold_of[i] == k ? held_out : train).push_back(i);
    const auto test_set = target.select_rows(held_out);
    const auto fit = bias_correct(target.select_rows(train), rough, lambda, config);
    out.predicted.push_back(predict_propensity(fit.corrected_model(rough.link), test_set, config.clip_epsilon));
    out.actual.push_back(test_set.treatment);
  }
  return out;
}

double fold_average(const FoldPredictions& folds, Metric metric, double clip) {
  double total = 0.0;
  for (std::size_t k = 0; k < folds.actual.size(); ++k) {
    const auto& a = folds.actual[k];
    const auto& p = folds.predicted[k];
    switch (metric) {
      case Metric::L2: total += l2_err(a, p); break;
      case Metric::CE: total += ce_err(a, p, clip); break;
      case Metric::AUC: {
        const auto positives = std::count(a.begin(), a.end(), 1.0);
        if (positives == 0 || positives == static_cast<std::ptrdiff_t>(a.size())) {
          throw Error(ErrorKind::InvalidInput, "fold " + std::to_string(k) + " lacks both treatment classes");
        }
        total += auc(a, p);
        break;
      }
    }
  }
  return total / static_cast<double>(folds.actual.size());
}

}  // namespace

CvResult cross_validated_metric(const ObservationSet& target, const PropensityModel& rough,
                                double lambda, std::size_t folds, Metric metric,
                                const GlmFitConfig& config, std::uint64_t seed) {
  const auto predictions = cv_predictions(target, rough, lambda, folds, config, seed);
  return CvResult{fold_average(predictions, metric, config.clip_epsilon), predictions.actual.size()};
}

std::string_view to_string(Criterion criterion) noexcept {
  switch (criterion) {
    case Criterion::MMD: return "mmd";
    case Criterion::SMD: return "smd";
    case Criterion::CvL2: return "l2";
    case Criterion::CvCE: return "ce";
    case Criterion::CvAUC: return "auc";
  }
  return "unknown";
}

Criterion parse_criterion(std::string_view name) {
  for (auto c : all_criteria()) {
    if (to_string(c) == name) return c;
  }
  throw Error(ErrorKind::Usage, "unknown criterion '" + std::string(name) + "'");
}

bool higher_is_better(Criterion criterion) noexcept { return criterion == Criterion::CvAUC; }

std::vector<Criterion> all_criteria() {
  return {Criterion::MMD, Criterion::SMD, Criterion::CvL2, Criterion::CvCE, Criterion::CvAUC};
}

bool CriterionReport::boundary_flag() const noexcept {
  return std::any_of(boundary.begin(), boundary.end(), [](bool b) { return b; });
}

double CriterionReport::selected_lambda(Criterion criterion) const {
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    if (criteria[c] != criterion) continue;
    if (!selected[c]) {
      throw Error(ErrorKind::InvalidInput, "criterion " + std::string(to_string(criterion)) +
                                               " is undefined on the whole grid: " + notes[c]);
    }
    return *selected[c];
  }
  throw Error(ErrorKind::Usage, "criterion " + std::string(to_string(criterion)) + " was not evaluated");
}

double CriterionReport::estimate_at(double lambda) const {
  const auto it = std::find(lambda_grid.begin(), lambda_grid.end(), lambda);
  if (it == lambda_grid.end()) throw Error(ErrorKind::InvalidInput, "lambda not on the grid");
  return estimates[static_cast<std::size_t>(it - lambda_grid.begin())];
}

namespace {

struct GridPoint {
  std::vector<double> values;
  std::vector<std::string> errors;
  double estimate = kNaN;
  std::size_t sparsity = 0;
};

GridPoint evaluate_point(const ObservationSet& target, const PropensityModel& rough, double lambda,
                         const GlmFitConfig& config, const SelectionOptions& options) {
  GridPoint point;
  point.values.assign(options.criteria.size(), kNaN);
  point.errors.resize(options.criteria.size());

  std::vector<double> propensities;
  try {
    const auto fit = bias_correct(target, rough, lambda, config);
    point.sparsity = fit.sparsity();
    propensities = predict_propensity(fit.corrected_model(rough.link), target, config.clip_epsilon);
    point.estimate = ipw_ace(target, propensities).value;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Separation) throw;
    std::fill(point.errors.begin(), point.errors.end(), e.what());
    return point;
  }

  std::optional<WeightedCovariateSets> sets;
  std::optional<FoldPredictions> cv;
  std::string cv_error;
  for (std::size_t c = 0; c < options.criteria.size(); ++c) {
    const auto criterion = options.criteria[c];
    try {
      if (criterion == Criterion::MMD || criterion == Criterion::SMD) {
        if (!sets) sets = make_weighted_sets(target, propensities);
        point.values[c] = criterion == Criterion::MMD
                              ? mmd_unbiased(sets->treated, sets->control, options.kernel)
                              : smd(*sets);
        continue;
      }
      if (!cv && cv_error.empty()) {
        try {
          cv = cv_predictions(target, rough, lambda, options.folds, config, options.seed);
        } catch (const Error& e) {
          cv_error = e.what();
        }
      }
      if (!cv) {
        point.errors[c] = cv_error;
        continue;
      }
      const auto metric = criterion == Criterion::CvL2   ? Metric::L2
                          : criterion == Criterion::CvCE ? Metric::CE
                                                         : Metric::AUC;
      point.values[c] = fold_average(*cv, metric, config.clip_epsilon);
    } catch (const Error& e) {
      // Data conditions (too few controls, single-class folds, diverging
      // fold fits) leave the criterion undefined at this lambda.
      point.errors[c] = e.what();
    }
  }
  return point;
}

std::vector<GridPoint> evaluate_points(const ObservationSet& target, const PropensityModel& rough,
                                       std::span<const double> lambdas, const GlmFitConfig& config,
                                       const SelectionOptions& options) {
  std::vector<GridPoint> points(lambdas.size());
  parallel_for(lambdas.size(), options.threads, [&](std::size_t g) {
    points[g] = evaluate_point(target, rough, lambdas[g], config, options);
  });
  return points;
}

void check_grid(std::span<const double> grid) {
  if (grid.empty()) throw Error(ErrorKind::InvalidInput, "lambda grid is empty");
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (!std::isfinite(grid[g]) || grid[g] < 0.0) {
      throw Error(ErrorKind::InvalidInput, "lambda grid entries must be finite and non-negative");
    }
    if (g > 0 && !(grid[g] > grid[g - 1])) {
      throw Error(ErrorKind::InvalidInput, "lambda grid must be strictly ascending");
    }
  }
}

CriterionReport assemble(std::vector<double> grid, std::vector<GridPoint> points,
                         const PropensityModel& rough, const SelectionOptions& options) {
  CriterionReport report;
  report.lambda_grid = std::move(grid);
  report.criteria = options.criteria;
  report.rough = rough;
  const std::size_t nc = options.criteria.size();
  report.selected.assign(nc, std::nullopt);
  report.boundary.assign(nc, false);
  report.notes.assign(nc, "");
  for (auto& point : points) {
    report.values.push_back(point.values);
    report.estimates.push_back(point.estimate);
    report.sparsity.push_back(point.sparsity);
    for (std::size_t c = 0; c < nc; ++c) {
      if (report.notes[c].empty() && !point.errors[c].empty()) report.notes[c] = point.errors[c];
    }
  }
  for (std::size_t c = 0; c < nc; ++c) {
    const bool maximise = higher_is_better(options.criteria[c]);
    std::optional<std::size_t> best;
    for (std::size_t g = 0; g < report.lambda_grid.size(); ++g) {
      const double v = report.values[g][c];
      if (!std::isfinite(v)) continue;
      // Strict comparison keeps the smallest lambda on ties.
      if (!best || (maximise ? v > report.values[*best][c] : v < report.values[*best][c])) best = g;
    }
    if (best) {
      report.selected[c] = report.lambda_grid[*best];
      report.boundary[c] = *best == 0 || *best + 1 == report.lambda_grid.size();
    }
  }
  return report;
}

}  // namespace

CriterionReport select_lambda(const ObservationSet& target, const PropensityModel& rough,
                              std::span<const double> grid, const GlmFitConfig& config,
                              const SelectionOptions& options) {
  check_grid(grid);
  validate(target);
  if (options.criteria.empty()) throw Error(ErrorKind::Usage, "no selection criteria requested");
  auto points = evaluate_points(target, rough, grid, config, options);
  return assemble(std::vector<double>(grid.begin(), grid.end()), std::move(points), rough, options);
}

CriterionReport select_lambda(const DomainPair& pair, std::span<const double> grid, LinkKind link,
                              const GlmFitConfig& config, const SelectionOptions& options) {
  check_grid(grid);
  validate(pair);
  const auto rough = rough_estimate(pair.source, link, config);
  return select_lambda(pair.target, rough.model, grid, config, options);
}

std::vector<double> linear_grid(double min, double max, double step) {
  if (!(step > 0.0) || !std::isfinite(step)) throw Error(ErrorKind::InvalidInput, "grid step must be positive");
  if (!(min >= 0.0) || !(max >= min) || !std::isfinite(max)) {
    throw Error(ErrorKind::InvalidInput, "grid bounds must satisfy 0 <= min <= max");
  }
  const auto count = static_cast<std::size_t>(std::floor((max - min) / step + 1e-9)) + 1;
  std::vector<double> grid(count);
  for (std::size_t k = 0; k < count; ++k) grid[k] = min + static_cast<double>(k) * step;
  return grid;
}

CriterionReport select_lambda_auto(const ObservationSet& target, const PropensityModel& rough,
                                   const GridSpec& spec, const GlmFitConfig& config,
                                   const SelectionOptions& options) {
  validate(target);
  if (options.criteria.empty()) throw Error(ErrorKind::Usage, "no selection criteria requested");
  // Grid points are spec.min + k * step for integer k, so repeated
  // expansions reproduce identical lambda values.
  auto value_at = [&](long k) { return std::max(0.0, spec.min + static_cast<double>(k) * spec.step); };
  const auto initial = linear_grid(spec.min, spec.max, spec.step);
  long k_low = 0;
  long k_high = static_cast<long>(initial.size()) - 1;
  const long k_floor = -static_cast<long>(std::floor(spec.min / spec.step + 1e-9));

  std::map<long, GridPoint> points;
  auto evaluate_range = [&](long from, long to) {
    std::vector<double> lambdas;
    for (long k = from; k <= to; ++k) lambdas.push_back(value_at(k));
    auto evaluated = evaluate_points(target, rough, lambdas, config, options);
    for (long k = from; k <= to; ++k) points[k] = std::move(evaluated[static_cast<std::size_t>(k - from)]);
  };
  auto build = [&] {
    std::vector<double> grid;
    std::vector<GridPoint> ordered;
    for (const auto& [k, point] : points) {
      grid.push_back(value_at(k));
      ordered.push_back(point);
    }
    return assemble(std::move(grid), std::move(ordered), rough, options);
  };

  evaluate_range(k_low, k_high);
  auto report = build();
  for (std::size_t round = 0; round < spec.max_expansions; ++round) {
    bool grow_up = false;
    bool grow_down = false;
    for (const auto& sel : report.selected) {
      if (!sel) continue;
      grow_up = grow_up || *sel == report.lambda_grid.back();
      grow_down = grow_down || (*sel == report.lambda_grid.front() && k_low > k_floor);
    }
    if (!grow_up && !grow_down) break;
    const long width = k_high - k_low;
    if (grow_up) {
      evaluate_range(k_high + 1, k_high + std::max(width, 1L));
      k_high += std::max(width, 1L);
    }
    if (grow_down) {
      const long new_low = std::max(k_floor, k_low - std::max(width, 1L));
      evaluate_range(new_low, k_low - 1);
      k_low = new_low;
    }
    report = build();
    report.expansions = round + 1;
  }
  return report;
}

CriterionReport select_lambda_auto(const DomainPair& pair, const GridSpec& spec, LinkKind link,
                                   const GlmFitConfig& config, const SelectionOptions& options) {
  validate(pair);
  const auto rough = rough_estimate(pair.source, link, config);
  return select_lambda_auto(pair.target, rough.model, spec, config, options);
}

}  // namespace tclkit
