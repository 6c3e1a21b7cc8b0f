#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "rcps/calibration.hpp"
#include "rcps/setfns.hpp"

using namespace rcps;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

LossMatrix matrix_from_rows(std::vector<double> grid, const std::vector<std::vector<double>>& rows) {
    LossMatrix m;
    m.grid.values = std::move(grid);
    m.rows = rows.size();
    m.cols = m.grid.size();
    for (const auto& r : rows) {
        for (double v : r) m.data.push_back(v);
    }
    return m;
}

} // namespace

TEST_CASE("matrix validation") {
    const auto ok = matrix_from_rows({0.0, 0.5, 1.0}, {{0.3, 0.3, 0.3}, {0.9, 0.9, 0.9}});
    CHECK_NOTHROW(validate_matrix(ok));

    // within the 1e-9 tolerance
    const auto slack = matrix_from_rows({0.0, 0.5, 1.0}, {{0.5, 0.5 + 5e-10, 0.2}});
    CHECK_NOTHROW(validate_matrix(slack));

    const auto bad = matrix_from_rows({0.0, 0.5, 1.0}, {{0.5, 0.2, 0.3}});
    CHECK_THROWS_WITH_AS(validate_matrix(bad),
                         doctest::Contains("row 0 increases at column 2"), std::invalid_argument);

    const auto nan = matrix_from_rows({0.0, 1.0}, {{0.5, std::nan("")}});
    CHECK_THROWS_AS(validate_matrix(nan), std::invalid_argument);
    const auto neg = matrix_from_rows({0.0, 1.0}, {{0.5, -0.1}});
    CHECK_THROWS_AS(validate_matrix(neg), std::invalid_argument);

    LossMatrix short_grid;
    short_grid.grid.values = {0.0};
    short_grid.rows = 1;
    short_grid.cols = 1;
    short_grid.data = {0.0};
    CHECK_THROWS_AS(validate_matrix(short_grid), std::invalid_argument);

    auto unsorted = ok;
    unsorted.grid.values = {0.5, 0.0, 1.0};
    CHECK_THROWS_AS(validate_matrix(unsorted), std::invalid_argument);
}

TEST_CASE("empirical risk curve") {
    const auto single = matrix_from_rows({0.0, 1.0}, {{1.0, 0.0}});
    CHECK(empirical_risk_curve(single) == std::vector<double>{1.0, 0.0});

    const auto pair = matrix_from_rows({0.0, 1.0}, {{1.0, 0.0}, {0.0, 0.0}});
    CHECK(empirical_risk_curve(pair) == std::vector<double>{0.5, 0.0});

    // against an independent per-column accumulation
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const std::size_t n = 1000;
    const std::size_t cols = 7;
    LossMatrix m;
    m.grid.values = {-0.7, -0.6, -0.5, -0.4, -0.3, -0.2, -0.1};
    m.rows = n;
    m.cols = cols;
    m.data.resize(n * cols);
    for (std::size_t i = 0; i < n; ++i) {
        double v = unif(rng) < 0.5 ? 1.0 : 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            if (unif(rng) < 0.3) v = 0.0; // rows fall toward zero, staying monotone
            m.data[i * cols + j] = v;
        }
    }
    const auto curve = empirical_risk_curve(m);
    for (std::size_t j = 0; j < cols; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += m.at(i, j);
        CHECK(curve[j] == doctest::Approx(sum / static_cast<double>(n)).epsilon(1e-15));
    }
}

TEST_CASE("lambda selection") {
    LambdaGrid grid{{0.0, 0.5, 1.0}};

    const std::vector<double> all_high{0.2, 0.15, 0.05};
    auto sel = select_lambda_hat(all_high, grid, 0.1);
    CHECK(sel.lambda_hat == 1.0);
    CHECK_FALSE(sel.saturated);

    const std::vector<double> mid{0.2, 0.08, 0.05};
    sel = select_lambda_hat(mid, grid, 0.1);
    CHECK(sel.lambda_hat == 0.5);

    // non-monotone UCB curve: the for-all-to-the-right condition blocks lambda=0
    const std::vector<double> bumpy{0.05, 0.2, 0.01};
    sel = select_lambda_hat(bumpy, grid, 0.1);
    CHECK(sel.lambda_hat == 1.0);

    const std::vector<double> hopeless{0.5, 0.4, 0.3};
    sel = select_lambda_hat(hopeless, grid, 0.1);
    CHECK(sel.lambda_hat == 1.0);
    CHECK(sel.saturated);

    const std::vector<double> all_low{0.01, 0.02, 0.03};
    sel = select_lambda_hat(all_low, grid, 0.1);
    CHECK(sel.lambda_hat == 0.0);
}

TEST_CASE("calibrate_rcps on an all-zero matrix picks the smallest lambda") {
    LossMatrix m;
    m.grid.values = {-1.0, -0.5, 0.0};
    m.rows = 200;
    m.cols = 3;
    m.data.assign(m.rows * m.cols, 0.0);
    for (BoundKind kind : {BoundKind::SimpleHoeffding, BoundKind::HoeffdingBentkus,
                           BoundKind::BinomialExact, BoundKind::Wsr}) {
        const CalibrationReport rep = calibrate_rcps(m, {kind, 0.1, std::nullopt}, 0.1);
        CHECK(rep.lambda_hat == -1.0);
        CHECK_FALSE(rep.saturated);
        for (std::size_t j = 0; j < m.cols; ++j) {
            CHECK(rep.ucb_curve[j] >= rep.risk_curve[j]);
        }
    }
}

TEST_CASE("calibrate_rcps saturates instead of failing") {
    LossMatrix m;
    m.grid.values = {-1.0, 0.0};
    m.rows = 50;
    m.cols = 2;
    m.data.assign(m.rows * m.cols, 1.0);
    const CalibrationReport rep = calibrate_rcps(m, {BoundKind::Wsr, 0.1, std::nullopt}, 0.1);
    CHECK(rep.saturated);
    CHECK(rep.lambda_hat == 0.0);
}

TEST_CASE("calibration-scale run: n=30000 stays non-saturated on clean data") {
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const std::size_t n = 30000;
    const std::size_t classes = 10;
    std::vector<std::vector<double>> scores(n, std::vector<double>(classes));
    std::vector<int> labels(n);
    std::vector<double> weights(classes);
    for (auto& w : weights) w = unif(rng);
    for (std::size_t i = 0; i < n; ++i) {
        double total = 0.0;
        for (auto& s : scores[i]) {
            s = 0.01 + unif(rng);
            total += s;
        }
        for (auto& s : scores[i]) s /= total;
        // a fairly good model: the label usually matches the argmax
        std::size_t arg = 0;
        for (std::size_t c = 1; c < classes; ++c) {
            if (scores[i][c] > scores[i][arg]) arg = c;
        }
        labels[i] = unif(rng) < 0.85 ? static_cast<int>(arg)
                                     : static_cast<int>(unif(rng) * classes) % classes;
    }
    LambdaGrid grid;
    for (int j = 0; j <= 20; ++j) grid.values.push_back(-1.0 + 0.05 * j);
    const LossMatrix m = classification_loss_matrix(scores, labels, weights, grid);
    const CalibrationReport rep = calibrate_rcps(m, {BoundKind::Wsr, 0.1, std::nullopt}, 0.1);
    CHECK_FALSE(rep.saturated);
    CHECK(rep.lambda_hat >= -1.0);
    CHECK(rep.lambda_hat < 0.0);
    CHECK(rep.relative_gap < 0.5); // plenty of calibration data
}

TEST_CASE("lambda_hat responds monotonically to alpha and delta") {
    std::mt19937_64 rng(44);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    LossMatrix m;
    m.grid.values = {-1.0, -0.8, -0.6, -0.4, -0.2, 0.0};
    m.rows = 400;
    m.cols = 6;
    m.data.resize(m.rows * m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        double v = 1.0;
        for (std::size_t j = 0; j < m.cols; ++j) {
            if (unif(rng) < 0.45) v = std::max(0.0, v - unif(rng));
            if (j == m.cols - 1) v = 0.0;
            m.at(i, j) = v;
        }
    }
    double prev = -kInf;
    for (double alpha : {0.3, 0.2, 0.1, 0.05}) {
        const auto rep = calibrate_rcps(m, {BoundKind::HoeffdingBentkus, 0.1, std::nullopt}, alpha);
        CHECK(rep.lambda_hat >= prev); // tighter alpha, larger sets
        prev = rep.lambda_hat;
    }
    prev = -kInf;
    for (double delta : {0.4, 0.1, 0.01, 0.001}) {
        const auto rep = calibrate_rcps(m, {BoundKind::HoeffdingBentkus, delta, std::nullopt}, 0.15);
        CHECK(rep.lambda_hat >= prev); // tighter delta, larger sets
        prev = rep.lambda_hat;
    }
}

TEST_CASE("conformal scores") {
    const auto m = matrix_from_rows({0.0, 0.5, 1.0},
                                    {{1.0, 1.0, 0.0}, {0.0, 0.0, 0.0}, {1.0, 1.0, 0.2}});
    const auto scores = conformal_scores(m);
    REQUIRE(scores.size() == 3);
    CHECK(scores[0] == 1.0);
    CHECK(scores[1] == 0.0);
    CHECK(std::isinf(scores[2]));
}

TEST_CASE("conformal quantile convention") {
    LambdaGrid grid{{0.0, 20.0}};

    std::vector<double> scores;
    for (int i = 1; i <= 19; ++i) scores.push_back(i);
    auto res = calibrate_conformal(scores, 0.1, grid);
    CHECK(res.order_stat_k == 18);
    CHECK(res.lambda_hat == 18.0);
    CHECK_FALSE(res.warning);

    scores.clear();
    for (int i = 1; i <= 9; ++i) scores.push_back(i);
    res = calibrate_conformal(scores, 0.1, grid);
    CHECK(res.order_stat_k == 9);
    CHECK(res.lambda_hat == 9.0);

    const std::vector<double> flat(25, 0.7);
    CHECK(calibrate_conformal(flat, 0.1, grid).lambda_hat == 0.7);

    // alpha below 1/(n+1): k caps at n with a warning
    res = calibrate_conformal(flat, 0.001, grid);
    CHECK(res.warning);
    CHECK(res.lambda_hat == 0.7);

    // infinite order statistic falls back to the grid maximum
    std::vector<double> with_inf(10, 1.0);
    with_inf[9] = kInf;
    res = calibrate_conformal(with_inf, 0.05, grid); // k = ceil(11*0.95) = 11 -> capped at 10
    CHECK(res.warning);
    res = calibrate_conformal(with_inf, 0.1, grid); // k = ceil(11*0.9) = 10 -> the inf
    CHECK(res.lambda_hat == 20.0);
    CHECK(res.warning);
}

TEST_CASE("calibrate_rcps accepts pairwise matrices for the U-statistic bound") {
    // 6 rows = 4 choose 2 pairs
    LossMatrix m;
    m.grid.values = {0.0, 1.0};
    m.rows = 6;
    m.cols = 2;
    m.data = {1, 0, 1, 0, 1, 0, 0, 0, 0, 0, 0, 0};
    const auto rep = calibrate_rcps(m, {BoundKind::UstatHbm, 0.1, std::nullopt}, 0.9);
    CHECK(rep.ucb_curve[0] >= 0.5);

    LossMatrix bad = m;
    bad.rows = 5;
    bad.data.resize(10);
    CHECK_THROWS_AS(calibrate_rcps(bad, {BoundKind::UstatHbm, 0.1, std::nullopt}, 0.9),
                    std::invalid_argument);
}
