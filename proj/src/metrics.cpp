#include "profet/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace profet {

using nlohmann::json;

namespace {

void check_lengths(std::span<const double> y_true, std::span<const double> y_pred) {
    if (y_true.empty()) throw ValidationError("metrics need at least one sample");
    if (y_true.size() != y_pred.size())
        throw ValidationError("metrics: length mismatch (" + std::to_string(y_true.size()) +
                              " vs " + std::to_string(y_pred.size()) + ")");
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

double mape(std::span<const double> y_true, std::span<const double> y_pred) {
    check_lengths(y_true, y_pred);
    double acc = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (!(y_true[i] > 0.0))
            throw ValidationError("mape requires strictly positive ground truth");
        acc += std::abs(y_pred[i] - y_true[i]) / y_true[i];
    }
    return 100.0 * acc / static_cast<double>(y_true.size());
}

double rmse(std::span<const double> y_true, std::span<const double> y_pred) {
    check_lengths(y_true, y_pred);
    double acc = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        double e = y_pred[i] - y_true[i];
        acc += e * e;
    }
    return std::sqrt(acc / static_cast<double>(y_true.size()));
}

double r2(std::span<const double> y_true, std::span<const double> y_pred) {
    check_lengths(y_true, y_pred);
    if (y_true.size() < 2) throw ValidationError("r2 needs at least two samples");
    double mean = 0.0;
    for (double v : y_true) mean += v;
    mean /= static_cast<double>(y_true.size());
    double ss_tot = 0.0, ss_res = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
        ss_res += (y_pred[i] - y_true[i]) * (y_pred[i] - y_true[i]);
    }
    if (ss_tot == 0.0) throw ValidationError("r2 undefined for constant ground truth");
    return 1.0 - ss_res / ss_tot;
}

MetricsRow metrics_row(const std::string& anchor, const std::string& target,
                       std::span<const double> y_true, std::span<const double> y_pred) {
    MetricsRow row;
    row.anchor = anchor;
    row.target = target;
    row.n = y_true.size();
    row.mape_pct = mape(y_true, y_pred);
    row.rmse_ms = rmse(y_true, y_pred);
    try {
        row.r2 = r2(y_true, y_pred);
    } catch (const ValidationError&) {
        row.r2 = kNaN;
    }
    return row;
}

MetricsReport build_report(std::span<const PairEvaluation> evaluations) {
    if (evaluations.empty()) throw ValidationError("build_report needs at least one evaluation");
    MetricsReport report;
    std::vector<double> pooled_true, pooled_pred;
    double mape_sum = 0.0, rmse_sum = 0.0;
    for (const auto& ev : evaluations) {
        MetricsRow row = metrics_row(ev.anchor, ev.target, ev.y_true, ev.y_pred);
        mape_sum += row.mape_pct;
        rmse_sum += row.rmse_ms;
        report.per_pair.push_back(std::move(row));
        pooled_true.insert(pooled_true.end(), ev.y_true.begin(), ev.y_true.end());
        pooled_pred.insert(pooled_pred.end(), ev.y_pred.begin(), ev.y_pred.end());
    }
    report.aggregate = metrics_row("*", "*", pooled_true, pooled_pred);
    report.pair_mean_mape_pct = mape_sum / static_cast<double>(evaluations.size());
    report.pair_mean_rmse_ms = rmse_sum / static_cast<double>(evaluations.size());
    return report;
}

namespace {

json number_or_null(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

json row_to_json(const MetricsRow& row) {
    json j{{"anchor", row.anchor},
           {"target", row.target},
           {"n", row.n},
           {"mape_pct", row.mape_pct},
           {"rmse_ms", row.rmse_ms},
           {"r2", number_or_null(row.r2)}};
    if (!row.models.empty()) {
        json models = json::object();
        for (const auto& [name, m] : row.models) {
            models[name] = json{{"mape_pct", m.mape_pct},
                                {"rmse_ms", m.rmse_ms},
                                {"r2", number_or_null(m.r2)}};
        }
        j["models"] = models;
    }
    return j;
}

std::string fmt_double(double v, int precision = 4) {
    if (std::isnan(v)) return "-";
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(precision) << v;
    return ss.str();
}

}  // namespace

std::string report_to_json(const MetricsReport& report) {
    json j;
    json pairs = json::array();
    for (const auto& row : report.per_pair) pairs.push_back(row_to_json(row));
    j["pairs"] = pairs;
    j["aggregate"] = row_to_json(report.aggregate);
    j["pair_mean"] = {{"mape_pct", report.pair_mean_mape_pct},
                      {"rmse_ms", report.pair_mean_rmse_ms}};
    j["skipped"] = report.skipped;
    return j.dump(2) + "\n";
}

std::string report_to_table(const MetricsReport& report) {
    std::ostringstream out;
    auto line = [&](const std::string& a, const std::string& t, const std::string& n,
                    const std::string& mape_s, const std::string& rmse_s,
                    const std::string& r2_s) {
        out << std::left << std::setw(12) << a << std::setw(12) << t << std::right
            << std::setw(7) << n << std::setw(12) << mape_s << std::setw(12) << rmse_s
            << std::setw(10) << r2_s << '\n';
    };
    line("anchor", "target", "n", "mape_pct", "rmse_ms", "r2");
    for (const auto& row : report.per_pair) {
        line(row.anchor, row.target, std::to_string(row.n), fmt_double(row.mape_pct, 2),
             fmt_double(row.rmse_ms, 3), fmt_double(row.r2, 4));
    }
    line("(pooled)", "*", std::to_string(report.aggregate.n),
         fmt_double(report.aggregate.mape_pct, 2), fmt_double(report.aggregate.rmse_ms, 3),
         fmt_double(report.aggregate.r2, 4));
    out << "pair-mean mape_pct=" << fmt_double(report.pair_mean_mape_pct, 2)
        << " rmse_ms=" << fmt_double(report.pair_mean_rmse_ms, 3) << '\n';
    if (!report.skipped.empty()) {
        out << "skipped:\n";
        for (const auto& s : report.skipped) out << "  " << s << '\n';
    }
    return out.str();
}

}  // namespace profet
