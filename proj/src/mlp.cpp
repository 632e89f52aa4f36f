#include "profet/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "profet/rng.hpp"

namespace profet {

void MlpConfig::validate() const {
    if (hidden.empty()) throw ValidationError("mlp needs at least one hidden layer");
    for (int h : hidden)
        if (h < 1) throw ValidationError("hidden widths must be >= 1");
    if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
    if (epochs < 0) throw ValidationError("epochs must be >= 0");
    if (minibatch < 1) throw ValidationError("minibatch must be >= 1");
}

namespace {

constexpr double kLatencyFloorMs = 1e-6;

// out[b][o] = sum_j w[o][j] * in[b][j] + bias[o]; each output element is a
// single fixed-order reduction, so the parallel schedule cannot change bits.
void dense_forward(const DenseLayer& layer, const Matrix& in, Matrix& out, ExecPolicy policy) {
    const int n_out = static_cast<int>(layer.w.rows());
    const std::size_t n_in = layer.w.cols();
    const std::size_t batch = in.rows();
#pragma omp parallel for schedule(static) if (policy == ExecPolicy::Parallel)
    for (int o = 0; o < n_out; ++o) {
        auto wrow = layer.w.row(o);
        for (std::size_t b = 0; b < batch; ++b) {
            auto xrow = in.row(b);
            double acc = layer.b[o];
            for (std::size_t j = 0; j < n_in; ++j) acc += wrow[j] * xrow[j];
            out.at(b, o) = acc;
        }
    }
}

void relu_inplace(Matrix& m) {
    for (double& v : m.data()) v = v > 0.0 ? v : 0.0;
}

struct ForwardPass {
    std::vector<Matrix> activations;  // activations[0] = input, size L+1
    std::vector<Matrix> pre_acts;     // size L
};

ForwardPass forward(const std::vector<DenseLayer>& layers, const Matrix& input,
                    ExecPolicy policy) {
    ForwardPass fp;
    fp.activations.reserve(layers.size() + 1);
    fp.pre_acts.reserve(layers.size());
    fp.activations.push_back(input);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        Matrix z(input.rows(), layers[l].w.rows());
        dense_forward(layers[l], fp.activations.back(), z, policy);
        fp.pre_acts.push_back(z);
        if (l + 1 < layers.size()) relu_inplace(z);  // linear head
        fp.activations.push_back(std::move(z));
    }
    return fp;
}

Matrix scale_features(const MlpModel& m, const Matrix& X) {
    Matrix out(X.rows(), X.cols());
    for (std::size_t i = 0; i < X.rows(); ++i)
        for (std::size_t j = 0; j < X.cols(); ++j)
            out.at(i, j) = (X.at(i, j) - m.feature_mean[j]) / m.feature_std[j];
    return out;
}

// Combined loss on scaled labels and, optionally, its gradient.
double loss_and_grad_scaled(const std::vector<DenseLayer>& layers, const Matrix& xs,
                            std::span<const double> ys, std::vector<DenseLayer>* grads,
                            ExecPolicy policy) {
    const std::size_t batch = xs.rows();
    ForwardPass fp = forward(layers, xs, policy);
    const Matrix& out = fp.activations.back();

    double abs_term = 0.0, sq_term = 0.0;
    std::vector<double> err(batch);
    for (std::size_t b = 0; b < batch; ++b) {
        err[b] = out.at(b, 0) - ys[b];
        abs_term += std::abs(err[b]) / ys[b];
        sq_term += err[b] * err[b];
    }
    const double nb = static_cast<double>(batch);
    const double rmse = std::sqrt(sq_term / nb);
    const double loss = abs_term / nb + rmse;
    if (grads == nullptr) return loss;

    grads->clear();
    for (const auto& layer : layers) {
        grads->push_back({Matrix(layer.w.rows(), layer.w.cols()),
                          std::vector<double>(layer.b.size(), 0.0)});
    }

    // dLoss/dout; the RMSE term vanishes identically when every error is 0.
    Matrix delta(batch, 1);
    for (std::size_t b = 0; b < batch; ++b) {
        double sign = (err[b] > 0.0) - (err[b] < 0.0);
        double g = sign / (nb * ys[b]);
        if (rmse > 0.0) g += err[b] / (nb * rmse);
        delta.at(b, 0) = g;
    }

    for (std::size_t l = layers.size(); l-- > 0;) {
        const Matrix& act_in = fp.activations[l];
        DenseLayer& g = (*grads)[l];
        const int n_out = static_cast<int>(layers[l].w.rows());
        const std::size_t n_in = layers[l].w.cols();

#pragma omp parallel for schedule(static) if (policy == ExecPolicy::Parallel)
        for (int o = 0; o < n_out; ++o) {
            double db = 0.0;
            auto grow = g.w.row(o);
            for (std::size_t b = 0; b < batch; ++b) {
                const double d = delta.at(b, o);
                db += d;
                auto arow = act_in.row(b);
                for (std::size_t j = 0; j < n_in; ++j) grow[j] += d * arow[j];
            }
            g.b[o] = db;
        }

        if (l == 0) break;
        const Matrix& z_prev = fp.pre_acts[l - 1];
        Matrix next(batch, n_in);
        const int nb_i = static_cast<int>(batch);
#pragma omp parallel for schedule(static) if (policy == ExecPolicy::Parallel)
        for (int b = 0; b < nb_i; ++b) {
            for (std::size_t j = 0; j < n_in; ++j) {
                double acc = 0.0;
                for (int o = 0; o < n_out; ++o)
                    acc += delta.at(b, o) * layers[l].w.at(o, j);
                next.at(b, j) = z_prev.at(b, j) > 0.0 ? acc : 0.0;
            }
        }
        delta = std::move(next);
    }
    return loss;
}

struct AdamState {
    std::vector<DenseLayer> m, v;
    long long t = 0;

    explicit AdamState(const std::vector<DenseLayer>& layers) {
        for (const auto& layer : layers) {
            m.push_back({Matrix(layer.w.rows(), layer.w.cols()),
                         std::vector<double>(layer.b.size(), 0.0)});
            v.push_back({Matrix(layer.w.rows(), layer.w.cols()),
                         std::vector<double>(layer.b.size(), 0.0)});
        }
    }

    void step(std::vector<DenseLayer>& layers, const std::vector<DenseLayer>& g,
              const MlpConfig& cfg) {
        ++t;
        const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
        for (std::size_t l = 0; l < layers.size(); ++l) {
            auto update = [&](double& param, double& mm, double& vv, double grad) {
                mm = cfg.beta1 * mm + (1.0 - cfg.beta1) * grad;
                vv = cfg.beta2 * vv + (1.0 - cfg.beta2) * grad * grad;
                param -= cfg.learning_rate * (mm / c1) / (std::sqrt(vv / c2) + cfg.epsilon);
            };
            auto& wd = layers[l].w.data();
            const auto& gd = g[l].w.data();
            for (std::size_t i = 0; i < wd.size(); ++i)
                update(wd[i], m[l].w.data()[i], v[l].w.data()[i], gd[i]);
            for (std::size_t i = 0; i < layers[l].b.size(); ++i)
                update(layers[l].b[i], m[l].b[i], v[l].b[i], g[l].b[i]);
        }
    }
};

}  // namespace

MlpModel fit_mlp(const Matrix& X, std::span<const double> y, const MlpConfig& config,
                 std::uint64_t seed, ExecPolicy policy) {
    config.validate();
    const std::size_t n = X.rows();
    const std::size_t d = X.cols();
    if (n < 2) throw ValidationError("fit_mlp needs at least two samples");
    if (y.size() != n) throw ValidationError("fit_mlp: row count does not match label count");
    for (double v : X.data())
        if (!std::isfinite(v)) throw ValidationError("non-finite entry in feature matrix");
    for (double v : y) {
        if (!std::isfinite(v)) throw ValidationError("non-finite label");
        if (!(v > 0.0))
            throw ValidationError("fit_mlp requires positive labels (percentage-error term)");
    }

    MlpModel model;
    model.feature_mean.assign(d, 0.0);
    model.feature_std.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += X.at(i, j);
        model.feature_mean[j] = s / static_cast<double>(n);
        double sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double c = X.at(i, j) - model.feature_mean[j];
            sq += c * c;
        }
        double sd = std::sqrt(sq / static_cast<double>(n));
        model.feature_std[j] = sd < 1e-12 ? 1.0 : sd;
    }
    double ymean = 0.0;
    for (double v : y) ymean += v;
    model.target_scale = ymean / static_cast<double>(n);

    rng::Engine engine(seed);
    std::vector<int> widths;
    widths.push_back(static_cast<int>(d));
    widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
    widths.push_back(1);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        DenseLayer layer{Matrix(widths[l + 1], widths[l]),
                         std::vector<double>(widths[l + 1], 0.0)};
        const double sd = std::sqrt(2.0 / static_cast<double>(widths[l]));
        for (double& w : layer.w.data()) w = engine.normal(0.0, sd);
        model.layers.push_back(std::move(layer));
    }

    Matrix xs = scale_features(model, X);
    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = y[i] / model.target_scale;

    AdamState adam(model.layers);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::vector<DenseLayer> grads;

    const std::size_t bs = static_cast<std::size_t>(config.minibatch);
    model.epoch_loss.reserve(config.epochs);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        engine.shuffle(perm);
        double loss_sum = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < n; start += bs) {
            const std::size_t stop = std::min(start + bs, n);
            Matrix xb(stop - start, d);
            std::vector<double> yb(stop - start);
            for (std::size_t i = start; i < stop; ++i) {
                auto src = xs.row(perm[i]);
                auto dst = xb.row(i - start);
                std::copy(src.begin(), src.end(), dst.begin());
                yb[i - start] = ys[perm[i]];
            }
            loss_sum += loss_and_grad_scaled(model.layers, xb, yb, &grads, policy);
            adam.step(model.layers, grads, config);
            ++n_batches;
        }
        model.epoch_loss.push_back(loss_sum / static_cast<double>(n_batches));
    }
    return model;
}

double predict_mlp(const MlpModel& m, std::span<const double> x) {
    if (x.size() != m.n_features())
        throw ValidationError("predict_mlp: expected " + std::to_string(m.n_features()) +
                              " features, got " + std::to_string(x.size()));
    Matrix in(1, x.size());
    for (std::size_t j = 0; j < x.size(); ++j)
        in.at(0, j) = (x[j] - m.feature_mean[j]) / m.feature_std[j];
    ForwardPass fp = forward(m.layers, in, ExecPolicy::Serial);
    double out = fp.activations.back().at(0, 0) * m.target_scale;
    return out > kLatencyFloorMs ? out : kLatencyFloorMs;
}

double mlp_loss_and_grad(const MlpModel& m, const Matrix& X, std::span<const double> y,
                         std::vector<DenseLayer>* grads, ExecPolicy policy) {
    if (X.rows() != y.size())
        throw ValidationError("mlp_loss_and_grad: row count does not match label count");
    if (X.cols() != m.n_features())
        throw ValidationError("mlp_loss_and_grad: feature width mismatch");
    for (double v : y)
        if (!(v > 0.0)) throw ValidationError("mlp loss requires positive labels");
    Matrix xs = scale_features(m, X);
    std::vector<double> ys(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) ys[i] = y[i] / m.target_scale;
    return loss_and_grad_scaled(m.layers, xs, ys, grads, policy);
}

MlpKinkDistances mlp_kink_distances(const MlpModel& m, const Matrix& X,
                                    std::span<const double> y) {
    Matrix xs = scale_features(m, X);
    ForwardPass fp = forward(m.layers, xs, ExecPolicy::Serial);
    MlpKinkDistances out;
    out.min_abs_preactivation = std::numeric_limits<double>::infinity();
    out.min_abs_residual = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l + 1 < m.layers.size(); ++l) {  // hidden layers only
        for (double z : fp.pre_acts[l].data())
            out.min_abs_preactivation = std::min(out.min_abs_preactivation, std::abs(z));
    }
    const Matrix& pred = fp.activations.back();
    for (std::size_t b = 0; b < X.rows(); ++b) {
        double e = pred.at(b, 0) - y[b] / m.target_scale;
        out.min_abs_residual = std::min(out.min_abs_residual, std::abs(e));
    }
    return out;
}

}  // namespace profet
