#include "profet/linear.hpp"

#include <cmath>
#include <string>

namespace profet {

namespace {

void check_finite(const Matrix& X, std::span<const double> y) {
    for (double v : X.data())
        if (!std::isfinite(v)) throw ValidationError("non-finite entry in feature matrix");
    for (double v : y)
        if (!std::isfinite(v)) throw ValidationError("non-finite entry in labels");
}

// In-place Cholesky solve of (A + lambda*I) w = b for symmetric A.
// Returns false when a pivot collapses, i.e. the system is (numerically)
// rank deficient at this lambda.
bool cholesky_solve(Matrix A, std::vector<double> b, double lambda,
                    std::vector<double>& out) {
    const std::size_t n = A.rows();
    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        A.at(i, i) += lambda;
        max_diag = std::max(max_diag, std::abs(A.at(i, i)));
    }
    const double tiny = 1e-13 * (max_diag + 1.0);

    // A = L L^T, lower triangle stored in place.
    for (std::size_t j = 0; j < n; ++j) {
        double d = A.at(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= A.at(j, k) * A.at(j, k);
        if (!(d > tiny)) return false;
        d = std::sqrt(d);
        A.at(j, j) = d;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = A.at(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= A.at(i, k) * A.at(j, k);
            A.at(i, j) = s / d;
        }
    }
    // Forward then back substitution.
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= A.at(i, k) * b[k];
        b[i] = s / A.at(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= A.at(k, ii) * b[k];
        b[ii] = s / A.at(ii, ii);
    }
    out = std::move(b);
    return true;
}

}  // namespace

LinearModel fit_ols(const Matrix& X, std::span<const double> y) {
    const std::size_t n = X.rows();
    const std::size_t d = X.cols();
    if (n == 0) throw ValidationError("fit_ols needs at least one sample");
    if (y.size() != n) throw ValidationError("fit_ols: row count does not match label count");
    check_finite(X, y);

    // Normal equations over [X | 1].
    const std::size_t p = d + 1;
    Matrix A(p, p);
    std::vector<double> b(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto xi = X.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            for (std::size_t k = j; k < d; ++k) A.at(j, k) += xi[j] * xi[k];
            A.at(j, d) += xi[j];
            b[j] += xi[j] * y[i];
        }
        b[d] += y[i];
    }
    A.at(d, d) = static_cast<double>(n);
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t k = 0; k < j; ++k) A.at(j, k) = A.at(k, j);

    double avg_diag = 0.0;
    for (std::size_t j = 0; j < p; ++j) avg_diag += A.at(j, j);
    avg_diag /= static_cast<double>(p);

    std::vector<double> w;
    bool ok = cholesky_solve(A, b, 0.0, w);
    if (!ok) ok = cholesky_solve(A, b, 1e-8, w);
    // Feature columns in microseconds can dwarf an absolute 1e-8; scale the
    // ridge by the diagonal until the factorization goes through.
    double lambda = 1e-8 * (avg_diag + 1.0);
    while (!ok && lambda <= 1e-2 * (avg_diag + 1.0)) {
        ok = cholesky_solve(A, b, lambda, w);
        lambda *= 100.0;
    }
    if (!ok) throw ValidationError("fit_ols: normal equations could not be solved");

    LinearModel m;
    m.weights.assign(w.begin(), w.begin() + d);
    m.intercept = w[d];
    return m;
}

double predict_linear(const LinearModel& m, std::span<const double> x) {
    if (x.size() != m.weights.size())
        throw ValidationError("predict_linear: expected " + std::to_string(m.weights.size()) +
                              " features, got " + std::to_string(x.size()));
    double acc = m.intercept;
    for (std::size_t j = 0; j < x.size(); ++j) acc += m.weights[j] * x[j];
    return acc;
}

ScalarLinearBaseline fit_baseline(std::span<const double> lat_anchor,
                                  std::span<const double> lat_target) {
    const std::size_t n = lat_anchor.size();
    if (n < 2) throw ValidationError("fit_baseline needs at least two samples");
    if (lat_target.size() != n)
        throw ValidationError("fit_baseline: anchor/target length mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(lat_anchor[i] > 0.0) || !(lat_target[i] > 0.0) ||
            !std::isfinite(lat_anchor[i]) || !std::isfinite(lat_target[i]))
            throw ValidationError("fit_baseline: latencies must be positive and finite");
    }
    double mean_a = 0.0, mean_t = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_a += lat_anchor[i];
        mean_t += lat_target[i];
    }
    mean_a /= static_cast<double>(n);
    mean_t /= static_cast<double>(n);

    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lat_anchor[i] - mean_a) * (lat_anchor[i] - mean_a);
        sxy += (lat_anchor[i] - mean_a) * (lat_target[i] - mean_t);
    }
    ScalarLinearBaseline m;
    if (sxx == 0.0) {
        m.alpha = 0.0;
        m.beta = mean_t;
    } else {
        m.alpha = sxy / sxx;
        m.beta = mean_t - m.alpha * mean_a;
    }
    return m;
}

double predict_baseline(const ScalarLinearBaseline& m, double lat_anchor) {
    return m.alpha * lat_anchor + m.beta;
}

}  // namespace profet
