#include "rcps/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace rcps {

namespace {
constexpr double kRowTol = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();
} // namespace

void LambdaGrid::validate() const {
    if (values.size() < 2) throw std::invalid_argument("lambda grid needs at least 2 values");
    for (std::size_t j = 0; j < values.size(); ++j) {
        if (!std::isfinite(values[j])) throw std::invalid_argument("lambda grid must be finite");
        if (j > 0 && !(values[j] > values[j - 1])) {
            throw std::invalid_argument("lambda grid must be strictly increasing");
        }
    }
}

const LossMatrix& validate_matrix(const LossMatrix& matrix) {
    matrix.grid.validate();
    if (matrix.rows == 0) throw std::invalid_argument("loss matrix has no rows");
    if (matrix.cols != matrix.grid.size()) {
        throw std::invalid_argument("loss matrix width does not match the lambda grid");
    }
    if (matrix.data.size() != matrix.rows * matrix.cols) {
        throw std::invalid_argument("loss matrix storage size mismatch");
    }
    for (std::size_t i = 0; i < matrix.rows; ++i) {
        for (std::size_t j = 0; j < matrix.cols; ++j) {
            const double v = matrix.at(i, j);
            if (!std::isfinite(v) || v < 0.0) {
                throw std::invalid_argument("loss matrix entry at row " + std::to_string(i) +
                                            ", column " + std::to_string(j) +
                                            " is negative or not finite");
            }
            if (j > 0 && v > matrix.at(i, j - 1) + kRowTol) {
                throw std::invalid_argument(
                    "loss matrix row " + std::to_string(i) + " increases at column " +
                    std::to_string(j) + "; rows must be nonincreasing in lambda");
            }
        }
    }
    return matrix;
}

std::vector<double> empirical_risk_curve(const LossMatrix& matrix) {
    std::vector<double> curve(matrix.cols, 0.0);
    for (std::size_t i = 0; i < matrix.rows; ++i) {
        for (std::size_t j = 0; j < matrix.cols; ++j) {
            curve[j] += matrix.at(i, j);
        }
    }
    for (double& v : curve) v /= static_cast<double>(matrix.rows);
    return curve;
}

LambdaSelection select_lambda_hat(std::span<const double> ucb_curve, const LambdaGrid& grid,
                                  double alpha) {
    grid.validate();
    if (ucb_curve.size() != grid.size()) {
        throw std::invalid_argument("UCB curve length does not match the lambda grid");
    }
    const std::size_t last = grid.size() - 1;
    if (!(ucb_curve[last] < alpha)) {
        return {grid.values[last], last, true};
    }
    std::size_t j = last;
    while (j > 0 && ucb_curve[j - 1] < alpha) --j;
    return {grid.values[j], j, false};
}

CalibrationReport calibrate_rcps(const LossMatrix& matrix, const BoundSpec& bound, double alpha) {
    validate_matrix(matrix);
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("alpha must lie in (0,1)");

    CalibrationReport report;
    report.alpha = alpha;
    report.delta = bound.delta;
    report.bound = bound;
    report.cv_estimated = bound.kind == BoundKind::PinelisUtev && !bound.cv;
    report.risk_curve = empirical_risk_curve(matrix);
    report.ucb_curve.resize(matrix.cols);

    std::vector<double> column(matrix.rows);
    for (std::size_t j = 0; j < matrix.cols; ++j) {
        for (std::size_t i = 0; i < matrix.rows; ++i) column[i] = matrix.at(i, j);
        const UCBValue ucb = compute_ucb(bound, column);
        report.ucb_curve[j] = ucb.finite ? ucb.value : kInf;
    }

    const LambdaSelection sel = select_lambda_hat(report.ucb_curve, matrix.grid, alpha);
    report.lambda_hat = sel.lambda_hat;
    report.lambda_index = sel.index;
    report.saturated = sel.saturated;
    const double rhat = report.risk_curve[sel.index];
    report.relative_gap = (report.ucb_curve[sel.index] - rhat) / std::max(rhat, 1e-12);
    return report;
}

std::vector<double> conformal_scores(const LossMatrix& matrix) {
    validate_matrix(matrix);
    std::vector<double> scores(matrix.rows);
    for (std::size_t i = 0; i < matrix.rows; ++i) {
        double s = kInf;
        for (std::size_t j = 0; j < matrix.cols; ++j) {
            if (matrix.at(i, j) <= kRowTol) {
                s = matrix.grid.values[j];
                break;
            }
        }
        scores[i] = s;
    }
    return scores;
}

ConformalResult calibrate_conformal(std::span<const double> scores, double alpha,
                                    const LambdaGrid& grid) {
    grid.validate();
    if (scores.empty()) throw std::invalid_argument("no conformal scores");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("alpha must lie in (0,1)");

    const auto n = scores.size();
    // k-th order statistic with k = ceil((n+1)(1-alpha)); the 1e-9 guard keeps
    // products like 20*0.9 from ceiling up a float hair.
    auto k = static_cast<std::size_t>(
        std::ceil((static_cast<double>(n) + 1.0) * (1.0 - alpha) - 1e-9));
    ConformalResult out;
    if (k > n) {
        k = n;
        out.warning = true;
    }
    if (k < 1) k = 1;
    out.order_stat_k = k;

    std::vector<double> sorted(scores.begin(), scores.end());
    std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end());
    const double s = sorted[k - 1];
    if (std::isinf(s)) {
        out.lambda_hat = grid.values.back();
        out.warning = true;
    } else {
        out.lambda_hat = s;
    }
    return out;
}

} // namespace rcps
