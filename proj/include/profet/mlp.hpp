#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "profet/matrix.hpp"
#include "profet/parallel.hpp"

namespace profet {

struct MlpConfig {
    std::vector<int> hidden = {128, 64, 32, 16};  // output layer of width 1 is implicit
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int epochs = 200;
    int minibatch = 32;

    void validate() const;
};

struct DenseLayer {
    Matrix w;                // out x in, row-major
    std::vector<double> b;   // out
};

// Fully connected net with ReLU hidden layers and a linear head. Inputs are
// z-scored with training statistics (zero-variance features keep std = 1)
// and labels are divided by their training mean, so both loss terms are
// O(1). Predictions are clamped below at 1e-6 ms since a latency cannot be
// zero or negative.
struct MlpModel {
    std::vector<DenseLayer> layers;
    std::vector<double> feature_mean;
    std::vector<double> feature_std;
    double target_scale = 1.0;
    std::vector<double> epoch_loss;  // mean minibatch loss per epoch

    std::size_t n_features() const { return feature_mean.size(); }
};

// Minimizes mean(|e| / y_scaled) + sqrt(mean(e^2)) over scaled labels with
// Adam. He-initialized from the seed; fully deterministic given
// (X, y, config, seed), including under the parallel policy.
MlpModel fit_mlp(const Matrix& X, std::span<const double> y, const MlpConfig& config,
                 std::uint64_t seed, ExecPolicy policy = default_exec_policy());

double predict_mlp(const MlpModel& m, std::span<const double> x);

// Loss over the given batch plus, when `grads` is non-null, dLoss/dParams
// in the same shapes as the model layers. Shared by the trainer and the
// finite-difference tests.
double mlp_loss_and_grad(const MlpModel& m, const Matrix& X, std::span<const double> y,
                         std::vector<DenseLayer>* grads,
                         ExecPolicy policy = default_exec_policy());

// Kink diagnostics for gradient checking: the smallest |pre-activation|
// over all hidden units and the smallest |scaled residual| over the batch.
struct MlpKinkDistances {
    double min_abs_preactivation = 0.0;
    double min_abs_residual = 0.0;
};
MlpKinkDistances mlp_kink_distances(const MlpModel& m, const Matrix& X,
                                    std::span<const double> y);

}  // namespace profet
