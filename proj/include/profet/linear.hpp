#pragma once

#include <span>
#include <vector>

#include "profet/matrix.hpp"

namespace profet {

// Ordinary least squares with intercept. Fitted by normal equations; on
// rank deficiency the solve falls back to ridge with lambda = 1e-8
// (escalated by the data scale only if that still fails), which lands next
// to the minimum-norm solution.
struct LinearModel {
    std::vector<double> weights;
    double intercept = 0.0;
};

LinearModel fit_ols(const Matrix& X, std::span<const double> y);
double predict_linear(const LinearModel& m, std::span<const double> x);

// The order-1 comparison model: target batch latency as alpha * anchor
// batch latency + beta. Zero variance in the anchor latencies degenerates
// to alpha = 0, beta = mean(target).
struct ScalarLinearBaseline {
    double alpha = 0.0;
    double beta = 0.0;
};

ScalarLinearBaseline fit_baseline(std::span<const double> lat_anchor,
                                  std::span<const double> lat_target);
double predict_baseline(const ScalarLinearBaseline& m, double lat_anchor);

}  // namespace profet
