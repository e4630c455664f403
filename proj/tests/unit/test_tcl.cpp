#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "oracle_values.hpp"
#include "tclkit/sim.hpp"
#include "tclkit/tcl.hpp"

using namespace tclkit;

namespace {

DomainPair small_pair(std::uint64_t seed) {
  DomainPair pair;
  pair.source = testing::logistic_sample(2000, {0.6, -0.4, 0.3, 0.0, 0.2}, seed);
  pair.target = testing::logistic_sample(300, {0.6, -0.4, 0.8, 0.0, 0.2}, seed + 100);
  return pair;
}

}  // namespace

TEST_CASE("theoretical lambda") {
  const double narrow = theoretical_lambda({1.0, 100, 2000, 50});
  CHECK(std::abs(narrow - oracle::kLambdaRegimeNarrow) < 1e-6);
  const double rich = theoretical_lambda({1.0, 100, 1000000000, 50});
  CHECK(std::abs(rich - oracle::kLambdaRegimeRich) < 1e-6);
  CHECK(theoretical_lambda({2.0, 100, 2000, 50}) == doctest::Approx(2 * narrow).epsilon(1e-14));
  CHECK_THROWS_AS(theoretical_lambda({0.0, 100, 2000, 50}), Error);
  CHECK_THROWS_AS(theoretical_lambda({1.0, 0, 2000, 50}), Error);
}

TEST_CASE("empirical covariate bound") {
  DomainPair pair;
  pair.source = testing::make_obs({{1, -4}}, {1}, {0});
  pair.target = testing::make_obs({{3, 2}}, {0}, {0});
  CHECK(empirical_covariate_bound(pair) == 4.0);
}

TEST_CASE("huge lambda collapses onto the rough model exactly") {
  const auto pair = small_pair(1);
  const auto rough = rough_estimate(pair.source, LinkKind::Sigmoid, GlmFitConfig{});
  for (auto config : {GlmFitConfig{}, GlmFitConfig::reference_schedule()}) {
    const auto fit = bias_correct(pair.target, rough.model, 1e6, config);
    CHECK(fit.beta_corrected == fit.beta_rough);
    CHECK(std::all_of(fit.delta.begin(), fit.delta.end(), [](double v) { return v == 0.0; }));
    CHECK(fit.sparsity() == 0);
  }
}

TEST_CASE("lambda zero reproduces the target-only fit") {
  const auto pair = small_pair(2);
  const auto rough = rough_estimate(pair.source, LinkKind::Sigmoid, GlmFitConfig{});
  const auto fit = bias_correct(pair.target, rough.model, 0.0, GlmFitConfig{});
  const auto direct = fit_glm(pair.target, LinkKind::Sigmoid, GlmFitConfig{});
  for (std::size_t j = 0; j < fit.beta_corrected.size(); ++j) {
    CHECK(std::abs(fit.beta_corrected[j] - direct.model.beta[j]) < 1e-4);
  }
}

TEST_CASE("delta is the exact elementwise difference") {
  const auto pair = small_pair(3);
  const auto rough = rough_estimate(pair.source, LinkKind::Sigmoid, GlmFitConfig{});
  const auto fit = bias_correct(pair.target, rough.model, 0.01, GlmFitConfig{});
  for (std::size_t j = 0; j < fit.delta.size(); ++j) {
    CHECK(fit.delta[j] == fit.beta_corrected[j] - fit.beta_rough[j]);
  }
}

TEST_CASE("penalized objective is non-increasing") {
  const auto pair = small_pair(4);
  const auto rough = rough_estimate(pair.source, LinkKind::Sigmoid, GlmFitConfig{});
  for (auto config : {GlmFitConfig{}, GlmFitConfig::reference_schedule()}) {
    config.record_trace = true;
    config.max_iterations = 2000;
    const auto fit = bias_correct(pair.target, rough.model, 0.02, config);
    REQUIRE(fit.objective_trace.size() > 1);
    for (std::size_t k = 1; k < fit.objective_trace.size(); ++k) {
      CHECK(fit.objective_trace[k] <= fit.objective_trace[k - 1] + 1e-12);
    }
  }
}

TEST_CASE("solution path is continuous on a fine grid") {
  const auto pair = small_pair(5);
  const auto rough = rough_estimate(pair.source, LinkKind::Sigmoid, GlmFitConfig{});
  GlmFitConfig config;
  config.gradient_tolerance = 1e-10;
  std::vector<double> previous;
  double largest_jump = 0.0;
  for (int k = 0; k <= 40; ++k) {
    const auto fit = bias_correct(pair.target, rough.model, 1e-3 * k, config);
    if (!previous.empty()) {
      for (std::size_t j = 0; j < previous.size(); ++j) {
        largest_jump = std::max(largest_jump, std::abs(fit.beta_corrected[j] - previous[j]));
      }
    }
    previous = fit.beta_corrected;
  }
  // Adjacent solutions differ by O(grid step) times the inverse curvature.
  CHECK(largest_jump < 0.05);
}

TEST_CASE("sparsity shrinks as lambda grows, on average") {
  std::vector<double> mean_nonzero(4, 0.0);
  const std::vector<double> lambdas{0.0, 0.01, 0.03, 0.1};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto pair = small_pair(20 + seed);
    const auto rough = rough_estimate(pair.source, LinkKind::Sigmoid, GlmFitConfig{});
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
      mean_nonzero[k] += static_cast<double>(bias_correct(pair.target, rough.model, lambdas[k], GlmFitConfig{}).sparsity());
    }
  }
  for (std::size_t k = 1; k < lambdas.size(); ++k) CHECK(mean_nonzero[k] <= mean_nonzero[k - 1]);
}

TEST_CASE("rough estimate recovers a well-conditioned sigmoid source") {
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto config = SimConfig::reference_preset(seed);
    config.dimension = 5;
    config.sparsity = 0;
    config.n_source = 5000;
    config.true_link = LinkKind::Sigmoid;
    const auto [pair, truth] = generate(config);
    const auto fit = rough_estimate(pair.source, LinkKind::Sigmoid, GlmFitConfig{});
    double sq = 0.0;
    for (std::size_t j = 0; j < 5; ++j) sq += std::pow(fit.model.beta[j] - truth.beta_source[j], 2);
    total += std::sqrt(sq);
  }
  CHECK(total / 10.0 < 0.1);
}

TEST_CASE("bias_correct rejects bad input") {
  const auto pair = small_pair(6);
  PropensityModel wrong{LinkKind::Sigmoid, {0.0, 0.0}};
  CHECK_THROWS_AS(bias_correct(pair.target, wrong, 0.1, GlmFitConfig{}), Error);
  PropensityModel right{LinkKind::Sigmoid, std::vector<double>(5, 0.0)};
  CHECK_THROWS_AS(bias_correct(pair.target, right, -1.0, GlmFitConfig{}), Error);
  CHECK_THROWS_AS(bias_correct(pair.target, right, std::nan(""), GlmFitConfig{}), Error);
  CHECK_THROWS_AS(rough_estimate(ObservationSet{}, LinkKind::Sigmoid, GlmFitConfig{}), Error);
}
