#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "profet/errors.hpp"

namespace profet {

// Mean absolute percentage error, reported in percent. Requires strictly
// positive ground truth.
double mape(std::span<const double> y_true, std::span<const double> y_pred);

// Root mean squared error, same units as the labels.
double rmse(std::span<const double> y_true, std::span<const double> y_pred);

// Coefficient of determination about the mean of y_true. Requires at least
// two samples and non-zero variance in y_true.
double r2(std::span<const double> y_true, std::span<const double> y_pred);

struct ModelMetrics {
    double mape_pct = 0.0;
    double rmse_ms = 0.0;
    double r2 = 0.0;  // NaN when undefined (n < 2 or constant truth)
};

struct MetricsRow {
    std::string anchor;
    std::string target;
    std::size_t n = 0;
    double mape_pct = 0.0;
    double rmse_ms = 0.0;
    double r2 = 0.0;  // NaN when undefined
    // Optional per-predictor breakdown (linear / forest / mlp / baseline)
    // alongside the headline ensemble numbers above.
    std::map<std::string, ModelMetrics> models;
};

struct MetricsReport {
    std::vector<MetricsRow> per_pair;
    MetricsRow aggregate;  // pooled over every sample of every pair
    // Mean of the per-pair metrics. The pooled aggregate weighs pairs by
    // sample count; this one weighs pairs equally. Both are reported.
    double pair_mean_mape_pct = 0.0;
    double pair_mean_rmse_ms = 0.0;
    std::vector<std::string> skipped;
};

struct PairEvaluation {
    std::string anchor;
    std::string target;
    std::vector<double> y_true;
    std::vector<double> y_pred;
};

MetricsReport build_report(std::span<const PairEvaluation> evaluations);

// Row helper shared by build_report and the evaluation harness; r2 is NaN
// where undefined instead of an error.
MetricsRow metrics_row(const std::string& anchor, const std::string& target,
                       std::span<const double> y_true, std::span<const double> y_pred);

std::string report_to_json(const MetricsReport& report);
std::string report_to_table(const MetricsReport& report);

}  // namespace profet
