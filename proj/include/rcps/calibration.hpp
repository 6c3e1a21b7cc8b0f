#pragma once
// Risk calibration over a grid of nested set-valued predictors.
//
// Input is an n x K loss matrix: row i holds the losses L(Y_i, T_lambda(X_i))
// of one calibration example over an ascending lambda grid. Rows must be
// nonincreasing left to right (larger sets lose less). calibrate_rcps turns
// each column into a (1-delta) upper confidence bound and picks the smallest
// lambda whose UCB stays below alpha for every larger lambda, so that with
// probability 1-delta the selected predictor has risk at most alpha.
// calibrate_conformal is the split-conformal quantile baseline for binary
// losses, which controls the risk in expectation only.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rcps/bounds.hpp"

namespace rcps {

struct LambdaGrid {
    std::vector<double> values; // strictly ascending, at least 2 entries

    void validate() const;
    std::size_t size() const { return values.size(); }
};

struct LossMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data; // row-major, rows*cols entries
    LambdaGrid grid;

    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
};

// Throws unless every row is nonincreasing within 1e-9 and all entries are
// finite and nonnegative; returns its argument so calls can be chained.
const LossMatrix& validate_matrix(const LossMatrix& matrix);

// Column means.
std::vector<double> empirical_risk_curve(const LossMatrix& matrix);

struct LambdaSelection {
    double lambda_hat = 0.0;
    std::size_t index = 0;
    bool saturated = false; // even the largest lambda fails UCB < alpha
};

// Smallest grid lambda whose UCB is below alpha at it and at every larger
// lambda. UCB curves need not be monotone, so the scan runs right to left.
LambdaSelection select_lambda_hat(std::span<const double> ucb_curve, const LambdaGrid& grid,
                                  double alpha);

struct CalibrationReport {
    double lambda_hat = 0.0;
    std::size_t lambda_index = 0;
    std::vector<double> ucb_curve;
    std::vector<double> risk_curve;
    double alpha = 0.0;
    double delta = 0.0;
    BoundSpec bound;
    bool saturated = false;
    // (UCB - empirical risk) / max(empirical risk, 1e-12) at lambda_hat; the
    // calibration set is comfortably large once this is below ~0.1.
    double relative_gap = 0.0;
    bool cv_estimated = false; // Pinelis-Utev ran with a sample-estimated cv
};

CalibrationReport calibrate_rcps(const LossMatrix& matrix, const BoundSpec& bound, double alpha);

// Per row, the smallest grid lambda whose loss is <= 1e-9; +infinity when the
// row never reaches zero loss.
std::vector<double> conformal_scores(const LossMatrix& matrix);

struct ConformalResult {
    double lambda_hat = 0.0;
    bool warning = false; // order statistic was infinite or k had to be capped
    std::size_t order_stat_k = 0;
};

// The ceil((n+1)(1-alpha))-th smallest score, capped at n; infinite order
// statistics fall back to the grid maximum with a warning.
ConformalResult calibrate_conformal(std::span<const double> scores, double alpha,
                                    const LambdaGrid& grid);

} // namespace rcps
