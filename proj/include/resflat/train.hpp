#pragma once

#include <vector>

#include "resflat/data.hpp"
#include "resflat/model.hpp"

namespace resflat {

struct TrainConfig {
    double learning_rate = 1e-4;
    int epochs = 0;
    int batch_size = 512;
    double rmsprop_decay = 0.9;    // rho
    double rmsprop_epsilon = 1e-7;

    void validate() const;
};

// One accumulator block per parameter block, same shapes, zero-initialized.
// Elementwise v stays >= 0 at all times.
struct RmsPropState {
    ConvKernel projection;
    std::vector<ConvKernel> branches;
    std::vector<double> classifier_w;
    std::vector<double> classifier_b;
};

RmsPropState make_rmsprop_state(const ModelParams& params);

// v' = rho v + (1 - rho) g^2;  theta' = theta - lr g / (sqrt(v') + eps).
// Throws on non-finite gradients.
void rmsprop_apply(std::vector<double>& theta, const std::vector<double>& grad,
                   std::vector<double>& v, const TrainConfig& config);

void rmsprop_step(ModelParams& params, const ModelGrads& grads,
                  RmsPropState& state, const TrainConfig& config);

struct EpochMetrics {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double train_accuracy = 0.0;
    double val_accuracy = 0.0;
};

struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;
};

// Mean cross-entropy and argmax accuracy over the full dataset, evaluated in
// batches; ties broken toward the lowest class index.
EvalResult evaluate(const ModelParams& params, const ArchitectureSpec& spec,
                    const Dataset& ds);

struct TrainResult {
    std::vector<EpochMetrics> metrics;
    ModelParams final_params;
};

// Deterministic training: fixed batch plan each epoch, no shuffling, frozen
// full-set evaluation after every epoch. Two runs with equal inputs produce
// bitwise-identical metrics and parameters.
TrainResult train(const ArchitectureSpec& spec, const Dataset& train_ds,
                  const Dataset& val_ds, const TrainConfig& config);

}  // namespace resflat
