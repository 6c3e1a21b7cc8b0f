#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "rcps/simlab.hpp"

using namespace rcps;

namespace {

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

} // namespace

TEST_CASE("sampling is deterministic in the seed") {
    const DistSpec spec = DistSpec::beta(1.0, 0.1);
    const auto a = sample_dist(spec, 1000, 42);
    const auto b = sample_dist(spec, 1000, 42);
    CHECK(a == b);
    const auto c = sample_dist(spec, 1000, 43);
    CHECK(a != c);
}

TEST_CASE("distribution parameterizations hit their target means") {
    // law of large numbers at n = 1e6
    CHECK(mean_of(sample_dist(DistSpec::bernoulli(0.1), 1000000, 1)) ==
          doctest::Approx(0.1).epsilon(0.01)); // +-0.001 absolute
    CHECK(std::fabs(mean_of(sample_dist(DistSpec::bernoulli(0.1), 1000000, 1)) - 0.1) < 0.001);

    const DistSpec beta = DistSpec::beta(10.0, 0.01);
    CHECK(beta.beta_b() == doctest::Approx(990.0));
    CHECK(std::fabs(mean_of(sample_dist(beta, 200000, 2)) - 0.01) < 0.001);

    const DistSpec heavy_beta = DistSpec::beta(0.1, 0.1);
    CHECK(std::fabs(mean_of(sample_dist(heavy_beta, 400000, 3)) - 0.1) < 0.005);

    CHECK(std::fabs(mean_of(sample_dist(DistSpec::gamma(1.0), 400000, 4)) - 1.0) < 0.01);
    // shape far below 1 exercises the boosted sampler
    CHECK(std::fabs(mean_of(sample_dist(DistSpec::gamma(0.05), 1000000, 5)) - 1.0) < 0.03);

    CHECK(std::fabs(mean_of(sample_dist(DistSpec::squared_t(100.0), 400000, 6)) - 1.0) < 0.02);

    const DistSpec ln_light = DistSpec::lognormal(-0.125, 0.5);
    CHECK(ln_light.target_mean == doctest::Approx(1.0));
    CHECK(std::fabs(mean_of(sample_dist(ln_light, 400000, 7)) - 1.0) < 0.01);
    CHECK(DistSpec::lognormal(-2.0, 2.0).target_mean == doctest::Approx(1.0));

    CHECK_THROWS_AS(DistSpec::squared_t(2.0), std::domain_error);
    CHECK_THROWS_AS(DistSpec::beta(-1.0, 0.1), std::domain_error);
    CHECK_THROWS_AS(DistSpec::bernoulli(1.5), std::domain_error);
}

TEST_CASE("bound evaluation experiment") {
    const DistSpec spec = DistSpec::bernoulli(0.1);
    const std::vector<BoundKind> bounds{BoundKind::HoeffdingBentkus, BoundKind::SimpleHoeffding};
    const auto results = bound_eval_experiment(spec, 100, 0.1, bounds, 300, 9);
    REQUIRE(results.size() == 2);
    CHECK(results[0].bound == BoundKind::HoeffdingBentkus);
    CHECK(results[0].coverage >= 0.9);
    CHECK(results[1].coverage >= 0.9);
    // HB is tighter than simple Hoeffding
    CHECK(results[0].median_gap <= results[1].median_gap + 1e-12);
    CHECK(results[0].n == 100);
    CHECK(results[0].reps == 300);

    // bit-identical on rerun
    const auto again = bound_eval_experiment(spec, 100, 0.1, bounds, 300, 9);
    CHECK(results[0].coverage == again[0].coverage);
    CHECK(results[0].median_gap == again[0].median_gap);
    CHECK(results[0].mean_relative_gap == again[0].mean_relative_gap);

    // degenerate-confidence smoke: delta near 1 still covers a sane fraction
    const auto loose =
        bound_eval_experiment(spec, 100, 0.999, {BoundKind::HoeffdingBentkus}, 50, 10);
    CHECK(loose[0].coverage >= 0.0);
    CHECK(loose[0].coverage <= 1.0);
}

TEST_CASE("bound/distribution mismatches are rejected") {
    CHECK_THROWS_AS(bound_eval_experiment(DistSpec::gamma(1.0), 100, 0.1,
                                          {BoundKind::SimpleHoeffding}, 10, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(bound_eval_experiment(DistSpec::beta(1.0, 0.1), 100, 0.1,
                                          {BoundKind::BinomialExact}, 10, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(bound_eval_experiment(DistSpec::bernoulli(0.1), 100, 0.1,
                                          {BoundKind::UstatHbm}, 10, 1),
                    std::invalid_argument);
    CHECK_NOTHROW(bound_eval_experiment(DistSpec::gamma(1.0), 100, 0.1,
                                        {BoundKind::PinelisUtev, BoundKind::Clt}, 10, 1));
}

TEST_CASE("CLT undercovers rare Bernoulli losses") {
    const auto res =
        bound_eval_experiment(DistSpec::bernoulli(0.01), 100, 0.1, {BoundKind::Clt}, 500, 11);
    // about a third of samples are all-zero, so coverage collapses well below 0.9
    CHECK(res[0].coverage < 0.8);
}

TEST_CASE("class-varying task exposes an exact risk curve") {
    const ClassVaryingTask task = ClassVaryingTask::random(6, 8, 77);
    // scores are positive, so the full label set appears at lambda = 0
    CHECK(task.exact_risk(0.0) == 0.0);
    CHECK(task.exact_risk(-1.0) >= task.exact_risk(-0.5));

    LambdaGrid grid;
    for (int j = 0; j <= 20; ++j) grid.values.push_back(-1.0 + 0.05 * j);
    CHECK(task.max_risk(grid) == task.exact_risk(-1.0));

    // the empirical risk curve concentrates on the exact curve
    const std::size_t n = 20000;
    const LossMatrix m = task.sample_matrix(grid, n, 5);
    const auto curve = empirical_risk_curve(m);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double exact = task.exact_risk(grid.values[j]);
        const double se = std::sqrt(std::max(exact * (1.0 - exact), 1e-4) / n);
        CHECK(std::fabs(curve[j] - exact) < 6.0 * se + 1e-9);
    }
}

TEST_CASE("validity experiment controls the violation rate") {
    const ClassVaryingTask task = ClassVaryingTask::random(5, 6, 101);
    LambdaGrid grid;
    for (int j = 0; j <= 25; ++j) grid.values.push_back(-1.0 + 0.04 * j);

    const double alpha = 0.1;
    const BoundSpec wsr{BoundKind::Wsr, 0.1, std::nullopt};
    const auto summary = rcps_validity_experiment(task, grid, wsr, alpha, 800, 200, 13);
    CHECK(summary.trials == 200);
    CHECK(summary.saturated == 0);
    // delta = 0.1 with 200 trials: stay below 0.1 + 3 sqrt(.09/200) ~ 0.164
    CHECK(summary.violation_rate <= 0.164);
    // deterministic on matched seeds
    const auto again = rcps_validity_experiment(task, grid, wsr, alpha, 800, 200, 13);
    CHECK(summary.violations == again.violations);
    CHECK(summary.min_lambda_hat == again.min_lambda_hat);
}

TEST_CASE("alpha above the worst risk pins lambda_hat at the grid minimum") {
    const ClassVaryingTask task = ClassVaryingTask::random(4, 5, 55);
    LambdaGrid grid;
    for (int j = 0; j <= 10; ++j) grid.values.push_back(-1.0 + 0.1 * j);
    // alpha comfortably above the worst exact risk plus the bound width
    const double alpha = std::min(0.99, task.max_risk(grid) + 0.35);
    const BoundSpec wsr{BoundKind::Wsr, 0.1, std::nullopt};
    const auto summary = rcps_validity_experiment(task, grid, wsr, alpha, 2000, 50, 21);
    CHECK(summary.violations == 0);
    CHECK(summary.max_lambda_hat == -1.0); // every trial picked the smallest lambda
}

TEST_CASE("looser delta never lowers the violation rate on matched seeds") {
    const ClassVaryingTask task = ClassVaryingTask::random(5, 6, 404);
    LambdaGrid grid;
    for (int j = 0; j <= 25; ++j) grid.values.push_back(-1.0 + 0.04 * j);
    // a small calibration set keeps the selection tight enough to violate sometimes
    const auto loose = rcps_validity_experiment(task, grid, {BoundKind::Wsr, 0.5, std::nullopt},
                                                0.08, 150, 300, 31);
    const auto strict = rcps_validity_experiment(task, grid, {BoundKind::Wsr, 0.01, std::nullopt},
                                                 0.08, 150, 300, 31);
    CHECK(loose.violation_rate >= strict.violation_rate);
}
