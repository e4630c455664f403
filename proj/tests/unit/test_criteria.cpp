#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "oracle_values.hpp"
#include "tclkit/criteria.hpp"
#include "tclkit/estimators.hpp"
#include "tclkit/random.hpp"
#include "tclkit/sim.hpp"
#include "tclkit/tcl.hpp"

using namespace tclkit;

namespace {

Matrix points(std::vector<std::vector<double>> rows) { return Matrix::from_rows(rows); }

Matrix random_points(std::size_t n, std::size_t d, Engine& rng, double shift = 0.0) {
  Matrix m(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) m(i, j) = draw_normal(rng, shift, 1.0);
  }
  return m;
}

// Trapezoidal area under the empirical ROC curve.
double trapezoid_auc(const std::vector<double>& a, const std::vector<double>& s) {
  std::vector<std::size_t> order(a.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return s[i] > s[j]; });
  const double pos = std::count(a.begin(), a.end(), 1.0);
  const double neg = static_cast<double>(a.size()) - pos;
  double tp = 0, fp = 0, area = 0;
  for (std::size_t k = 0; k < order.size();) {
    double dtp = 0, dfp = 0;
    const double score = s[order[k]];
    while (k < order.size() && s[order[k]] == score) {
      (a[order[k]] == 1.0 ? dtp : dfp) += 1;
      ++k;
    }
    area += dfp / neg * (tp + tp + dtp) / (2 * pos);
    tp += dtp;
    fp += dfp;
  }
  return area;
}

}  // namespace

TEST_CASE("mmd two-point hand cases") {
  const auto ab = points({{0}, {1}});
  CHECK(std::abs(mmd_unbiased(ab, ab, KernelConfig::fixed(1.0)) - oracle::kMmdSameSets) < 1e-9);
  CHECK(std::abs(mmd_unbiased(ab, points({{10}, {11}}), KernelConfig::fixed(1.0)) - oracle::kMmdFarSets) < 1e-9);
  const KernelFunction constant = [](std::span<const double>, std::span<const double>) { return 1.0; };
  auto rng = make_engine(1);
  CHECK(mmd_unbiased(random_points(5, 3, rng), random_points(7, 3, rng), constant) == 0.0);
}

TEST_CASE("mmd preconditions") {
  CHECK_THROWS_AS(mmd_unbiased(points({{0}}), points({{0}, {1}}), KernelConfig::fixed(1.0)), Error);
  CHECK_THROWS_AS(mmd_unbiased(points({{0}, {1}}), points({{0, 1}, {1, 1}}), KernelConfig::fixed(1.0)), Error);
  CHECK_THROWS_AS(KernelConfig::fixed(0.0), Error);
}

TEST_CASE("mmd symmetry, permutation and translation invariance") {
  auto rng = make_engine(9);
  for (int rep = 0; rep < 5; ++rep) {
    const auto a = random_points(8, 3, rng);
    const auto b = random_points(6, 3, rng, 0.5);
    const auto k = KernelConfig::fixed(1.3);
    const double base = mmd_unbiased(a, b, k);
    CHECK(mmd_unbiased(b, a, k) == doctest::Approx(base).epsilon(1e-12));
    std::vector<std::size_t> perm(8);
    std::iota(perm.begin(), perm.end(), 0);
    shuffle(std::span<std::size_t>(perm), rng);
    CHECK(mmd_unbiased(a.select_rows(perm), b, k) == doctest::Approx(base).epsilon(1e-12));
    Matrix a2 = a, b2 = b;
    for (std::size_t i = 0; i < a2.rows(); ++i) a2(i, 1) += 4.2;
    for (std::size_t i = 0; i < b2.rows(); ++i) b2(i, 1) += 4.2;
    CHECK(mmd_unbiased(a2, b2, k) == doctest::Approx(base).epsilon(1e-10));
  }
}

TEST_CASE("median heuristic") {
  CHECK(median_heuristic_bandwidth(points({{0}, {2}})) == 2.0);
  CHECK(median_heuristic_bandwidth(points({{0}, {1}, {2}})) == 1.0);
  CHECK(median_heuristic_bandwidth(points({{3}, {3}, {3}})) == 1.0);
  // Median zero but some distances positive: mean fallback.
  CHECK(median_heuristic_bandwidth(points({{0}, {0}, {0}, {3}})) == doctest::Approx(1.5));
  CHECK_THROWS_AS(median_heuristic_bandwidth(points({{1}})), Error);
}

TEST_CASE("cohens d") {
  CHECK(std::abs(cohens_d(std::vector<double>{0, 2}, std::vector<double>{1, 3}) - oracle::kCohensDHand) < 1e-9);
  CHECK(cohens_d(std::vector<double>{1, 4, 2}, std::vector<double>{1, 4, 2}) == 0.0);
  CHECK_THROWS_AS(cohens_d(std::vector<double>{0, 0}, std::vector<double>{1, 1}), Error);
  CHECK_THROWS_AS(cohens_d(std::vector<double>{}, std::vector<double>{1, 2}), Error);
}

TEST_CASE("smd") {
  const WeightedCovariateSets same{points({{0, 1}, {2, 5}}), points({{0, 1}, {2, 5}})};
  CHECK(smd(same) == 0.0);
  const WeightedCovariateSets one_d{points({{0}, {2}}), points({{1}, {3}})};
  CHECK(smd(one_d) == doctest::Approx(std::abs(oracle::kCohensDHand)));
  // Coordinate d-values -1 and +1.
  const WeightedCovariateSets two_d{points({{0, 1}, {2, 3}}), points({{1, 0}, {3, 2}})};
  CHECK(smd(two_d) == doctest::Approx(1.0));
  const WeightedCovariateSets degenerate{points({{0, 1}, {0, 3}}), points({{1, 0}, {1, 2}})};
  CHECK_THROWS_WITH(smd(degenerate), doctest::Contains("coordinate 0"));
}

TEST_CASE("weighted covariate sets") {
  const auto obs = testing::make_obs({{1, 2}, {3, 4}, {5, 6}}, {1, 0, 1}, {0, 0, 0});
  const std::vector<double> e{0.5, 0.25, 0.8};
  const auto sets = make_weighted_sets(obs, e);
  CHECK(sets.treated.rows() + sets.control.rows() == 3);
  CHECK(sets.treated(0, 1) == 4.0);
  CHECK(sets.control(0, 0) == 4.0);
  CHECK(sets.treated(1, 0) == doctest::Approx(6.25));
}

TEST_CASE("l2 and cross-entropy") {
  const std::vector<double> a{1, 0};
  CHECK(l2_err(a, std::vector<double>{1, 0}) == 0.0);
  CHECK(std::abs(l2_err(a, std::vector<double>{0.5, 0.5}) - oracle::kL2Half) < 1e-9);
  CHECK(l2_err(std::vector<double>{1}, std::vector<double>{0}) == 1.0);
  CHECK(std::abs(ce_err(std::vector<double>{1}, std::vector<double>{0.5}, 1e-6) - oracle::kCeHalf) < 1e-9);
  CHECK(std::abs(ce_err(a, std::vector<double>{0.5, 0.5}, 1e-6) - oracle::kCeHalf) < 1e-9);
  CHECK(ce_err(std::vector<double>{1}, std::vector<double>{1 - 1e-6}, 1e-6) == doctest::Approx(1e-6).epsilon(1e-3));
  CHECK(std::isfinite(ce_err(std::vector<double>{1}, std::vector<double>{0.0}, 1e-6)));
  CHECK_THROWS_AS(l2_err(a, std::vector<double>{1}), Error);
  CHECK_THROWS_AS(ce_err(a, std::vector<double>{1}, 1e-6), Error);

  auto rng = make_engine(4);
  std::vector<double> act(12), pred(12);
  for (std::size_t i = 0; i < 12; ++i) {
    act[i] = i % 2;
    pred[i] = draw_uniform(rng);
  }
  std::vector<std::size_t> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  shuffle(std::span<std::size_t>(perm), rng);
  std::vector<double> act2, pred2;
  for (auto i : perm) {
    act2.push_back(act[i]);
    pred2.push_back(pred[i]);
  }
  CHECK(l2_err(act, pred) == doctest::Approx(l2_err(act2, pred2)).epsilon(1e-14));
  CHECK(ce_err(act, pred, 0.01) == doctest::Approx(ce_err(act2, pred2, 0.01)).epsilon(1e-14));
}

TEST_CASE("auc") {
  CHECK(std::abs(auc(std::vector<double>{1, 0, 1, 0}, std::vector<double>{0.9, 0.8, 0.3, 0.1}) - oracle::kAucHand) < 1e-9);
  CHECK(auc(std::vector<double>{1, 1, 0}, std::vector<double>{0.9, 0.8, 0.1}) == 1.0);
  CHECK(auc(std::vector<double>{1, 0, 1}, std::vector<double>{0.4, 0.4, 0.4}) == 0.5);
  CHECK_THROWS_AS(auc(std::vector<double>{1, 1}, std::vector<double>{0.1, 0.2}), Error);

  auto rng = make_engine(21);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 2 + draw_index(rng, 29);
    std::vector<double> a(n), s(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = i < 1 ? 1.0 : i < 2 ? 0.0 : (draw_uniform(rng) < 0.5 ? 1.0 : 0.0);
      s[i] = std::round(draw_normal(rng, 0, 2));  // rounding creates ties
    }
    const double value = auc(a, s);
    CHECK(std::abs(value - trapezoid_auc(a, s)) < 1e-12);
    std::vector<double> transformed(n);
    for (std::size_t i = 0; i < n; ++i) transformed[i] = std::exp(s[i]) * 3 + 1;
    CHECK(auc(a, transformed) == value);
  }
}

TEST_CASE("fold assignment is stratified and seeded") {
  std::vector<double> a(23, 0.0);
  for (std::size_t i = 0; i < 7; ++i) a[i * 3] = 1.0;
  const auto f1 = assign_folds(a, 5, 3);
  CHECK(f1 == assign_folds(a, 5, 3));
  std::vector<int> treated(5, 0), sizes(5, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++sizes[f1[i]];
    if (a[i] == 1.0) ++treated[f1[i]];
  }
  CHECK(*std::max_element(treated.begin(), treated.end()) - *std::min_element(treated.begin(), treated.end()) <= 1);
  CHECK(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <= 1);
}

TEST_CASE("cross-validated metric") {
  const auto target = testing::logistic_sample(60, {0.8, -0.5}, 3);
  const PropensityModel rough{LinkKind::Sigmoid, {0.7, -0.4}};
  const auto r = cross_validated_metric(target, rough, 0.01, 5, Metric::AUC, GlmFitConfig{}, 7);
  CHECK(r.fits == 5);
  CHECK(r.value == cross_validated_metric(target, rough, 0.01, 5, Metric::AUC, GlmFitConfig{}, 7).value);

  const auto four = testing::make_obs({{1, 0}, {0, 1}, {1, 1}, {0.5, 0.2}}, {1, 0, 1, 0}, {0, 0, 0, 0});
  const auto loo = cross_validated_metric(four, rough, 0.1, 4, Metric::L2, GlmFitConfig{}, 0);
  CHECK(loo.fits == 4);
  CHECK_THROWS_AS(cross_validated_metric(four, rough, 0.1, 5, Metric::L2, GlmFitConfig{}, 0), Error);
  CHECK_THROWS_AS(cross_validated_metric(four, rough, 0.1, 1, Metric::L2, GlmFitConfig{}, 0), Error);
  CHECK_THROWS_AS(cross_validated_metric(four, rough, 0.1, 4, Metric::AUC, GlmFitConfig{}, 0), Error);
}

TEST_CASE("cross-validation at a huge penalty scores the rough model") {
  const auto [pair, truth] = generate(SimConfig::reference_preset(3));
  const auto rough = rough_estimate(pair.source, LinkKind::Sigmoid, GlmFitConfig::reference_schedule()).model;
  for (auto metric : {Metric::L2, Metric::CE}) {
    const double cv = cross_validated_metric(pair.target, rough, 1e6, 5, metric, GlmFitConfig{}, 11).value;
    const auto folds = assign_folds(pair.target.treatment, 5, 11);
    const auto e = predict_propensity(rough, pair.target, 0.01);
    double total = 0.0;
    for (std::size_t k = 0; k < 5; ++k) {
      std::vector<double> a, p;
      for (std::size_t i = 0; i < folds.size(); ++i) {
        if (folds[i] != k) continue;
        a.push_back(pair.target.treatment[i]);
        p.push_back(e[i]);
      }
      total += metric == Metric::L2 ? l2_err(a, p) : ce_err(a, p, 0.01);
    }
    CHECK(std::abs(cv - total / 5) < 1e-6);
  }
}

TEST_CASE("criterion names") {
  for (auto c : all_criteria()) CHECK(parse_criterion(to_string(c)) == c);
  CHECK(higher_is_better(Criterion::CvAUC));
  CHECK_FALSE(higher_is_better(Criterion::MMD));
  CHECK_THROWS_AS(parse_criterion("bic"), Error);
}

TEST_CASE("select_lambda on a small problem") {
  DomainPair pair;
  pair.source = testing::logistic_sample(800, {0.6, -0.4, 0.3}, 50);
  pair.target = testing::logistic_sample(120, {0.6, 0.2, 0.3}, 51);
  const std::vector<double> grid{0.0, 0.01, 0.02, 0.05};
  SelectionOptions options;
  const auto report = select_lambda(pair, grid, LinkKind::Sigmoid, GlmFitConfig{}, options);
  CHECK(report.values.size() == grid.size());
  CHECK(report.criteria.size() == 5);
  for (std::size_t c = 0; c < report.criteria.size(); ++c) {
    REQUIRE(report.selected[c].has_value());
    CHECK(std::find(grid.begin(), grid.end(), *report.selected[c]) != grid.end());
    const bool max = higher_is_better(report.criteria[c]);
    const double chosen = report.values[std::find(grid.begin(), grid.end(), *report.selected[c]) - grid.begin()][c];
    for (std::size_t g = 0; g < grid.size(); ++g) {
      CHECK((max ? report.values[g][c] <= chosen : report.values[g][c] >= chosen));
    }
  }
  CHECK(report.estimate_at(0.02) == tcl_ace(pair, LinkKind::Sigmoid, 0.02, GlmFitConfig{}).first.value);

  options.threads = 3;
  const auto threaded = select_lambda(pair, grid, LinkKind::Sigmoid, GlmFitConfig{}, options);
  CHECK(threaded.values == report.values);
  CHECK(threaded.selected == report.selected);
}

TEST_CASE("select_lambda degenerate grids") {
  DomainPair pair;
  pair.source = testing::logistic_sample(400, {0.6, -0.4}, 60);
  pair.target = testing::logistic_sample(80, {0.6, 0.2}, 61);
  SelectionOptions options;
  options.criteria = {Criterion::MMD, Criterion::CvL2};
  const std::vector<double> single{0.03};
  const auto report = select_lambda(pair, single, LinkKind::Sigmoid, GlmFitConfig{}, options);
  for (const auto& s : report.selected) CHECK(*s == 0.03);
  CHECK(report.boundary_flag());
  CHECK_THROWS_AS(select_lambda(pair, std::vector<double>{}, LinkKind::Sigmoid, GlmFitConfig{}, options), Error);
  CHECK_THROWS_AS(select_lambda(pair, std::vector<double>{0.1, 0.05}, LinkKind::Sigmoid, GlmFitConfig{}, options), Error);
}

TEST_CASE("a constant criterion selects the first grid point") {
  // With a huge grid every lambda collapses onto the rough model, so every
  // criterion is constant across the grid.
  DomainPair pair;
  pair.source = testing::logistic_sample(400, {0.6, -0.4}, 70);
  pair.target = testing::logistic_sample(80, {0.6, 0.2}, 71);
  const std::vector<double> grid{1e5, 2e5, 3e5};
  const auto report = select_lambda(pair, grid, LinkKind::Sigmoid, GlmFitConfig{}, SelectionOptions{});
  for (const auto& s : report.selected) CHECK(*s == 1e5);
}

TEST_CASE("criteria undefined at every lambda give no selection") {
  DomainPair pair;
  pair.source = testing::logistic_sample(400, {0.6, -0.4}, 80);
  // A single control row: MMD needs two per set.
  pair.target = testing::make_obs({{1, 0}, {0, 1}, {1, 1}, {2, 1}, {0.5, 0.3}}, {1, 1, 1, 1, 0}, {1, 2, 3, 4, 5});
  SelectionOptions options;
  options.criteria = {Criterion::MMD};
  const std::vector<double> grid{0.0, 0.1};
  const auto report = select_lambda(pair, grid, LinkKind::Sigmoid, GlmFitConfig{}, options);
  CHECK_FALSE(report.selected[0].has_value());
  CHECK_FALSE(report.notes[0].empty());
  CHECK(std::isnan(report.values[0][0]));
  CHECK_THROWS_AS(report.selected_lambda(Criterion::MMD), Error);
}

TEST_CASE("linear grid and automatic expansion") {
  const auto g = linear_grid(0.0, 0.1, 1e-3);
  CHECK(g.size() == 101);
  CHECK(g.back() == doctest::Approx(0.1));
  CHECK(linear_grid(0.2, 0.2, 0.1).size() == 1);
  CHECK_THROWS_AS(linear_grid(0.0, 0.1, 0.0), Error);
  CHECK_THROWS_AS(linear_grid(-0.1, 0.1, 0.01), Error);

  DomainPair pair;
  pair.source = testing::logistic_sample(800, {0.6, -0.4, 0.3}, 90);
  pair.target = testing::logistic_sample(150, {0.6, -0.4, 0.3}, 91);
  const auto rough = rough_estimate(pair.source, LinkKind::Sigmoid, GlmFitConfig{});
  SelectionOptions options;
  options.criteria = {Criterion::CvL2};
  // Grid far below the interesting range: expansion must grow it upward.
  const GridSpec spec{0.0, 0.002, 1e-3, 2};
  const auto report = select_lambda_auto(pair.target, rough.model, spec, GlmFitConfig{}, options);
  CHECK(report.lambda_grid.front() == 0.0);
  CHECK(std::is_sorted(report.lambda_grid.begin(), report.lambda_grid.end()));
  CHECK(std::adjacent_find(report.lambda_grid.begin(), report.lambda_grid.end()) == report.lambda_grid.end());
  if (report.expansions > 0) CHECK(report.lambda_grid.size() > 3);
  CHECK(report.expansions <= 2);
}
